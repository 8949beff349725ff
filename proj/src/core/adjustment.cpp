#include "netadjust/adjustment.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>

#include "csv.hpp"
#include "netadjust/error.hpp"
#include "netadjust/log.hpp"

namespace netadjust {

PrevalentCaseSurvival prevalent_case_survival(const StratumKey& origin,
                                              const OverallSurvival& survival,
                                              const PrevalenceModel& prevalence, int horizon,
                                              PrevalentSurvivalMode mode, Diagnostics* diag) {
  if (horizon < 0) throw Error(ErrorCode::kInvalidArgument, "prevalent survival: negative horizon");
  double alpha = prevalence.alpha(origin);
  if (!(alpha > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "prevalent survival undefined: zero prevalence at " + to_string(origin));
  }
  auto w = prevalence.lag_weights(origin);
  std::vector<double> values(static_cast<std::size_t>(horizon) + 1, 0.0);
  for (int t = 0; t <= horizon; ++t) {
    double acc = 0.0;
    for (int s = 1; s <= origin.age; ++s) {
      if (w[s] == 0.0) continue;
      const StratumKey diagnosed = origin.shifted(-s);
      double later = survival.at(diagnosed, t + s, diag);
      if (mode == PrevalentSurvivalMode::kConditional) {
        double at_origin = survival.at(diagnosed, s, diag);
        double ratio = at_origin > 0.0 ? later / at_origin : 0.0;
        acc += (w[s] / alpha) * (1.0 - ratio);
      } else {
        acc += (w[s] / alpha) * later;
      }
    }
    double v = mode == PrevalentSurvivalMode::kConditional ? 1.0 - acc : acc;
    values[t] = std::clamp(v, 0.0, 1.0);
  }
  return PrevalentCaseSurvival(origin, std::move(values));
}

const LatticeCell& Lattice::cell(const StratumKey& key) const {
  auto it = index.find(key);
  if (it == index.end()) throw Error(ErrorCode::kInternal, "key not in lattice: " + to_string(key));
  return cells[it->second];
}

std::map<StratumKey, int> lattice_horizons(std::span<const StratumKey> base, int horizon) {
  std::map<StratumKey, int> need;
  for (const auto& key : base) {
    for (int k = 0; k < horizon; ++k) {
      auto& n = need[key.shifted(k)];
      n = std::max(n, horizon - k);
    }
  }
  return need;
}

Lattice build_lattice(std::span<const StratumKey> base, const LifeTable& life_table,
                      const IncidenceTable& incidence, const OverallSurvival& survival,
                      const AdjustmentConfig& config, Diagnostics* diag) {
  if (base.empty()) throw Error(ErrorCode::kEmptyInput, "adjustment: no strata to adjust");
  if (config.horizon < 1) throw Error(ErrorCode::kInvalidArgument, "adjustment: horizon must be >= 1");

  auto need = lattice_horizons(base, config.horizon);
  std::vector<StratumKey> keys;
  keys.reserve(need.size());
  for (const auto& [key, n] : need) keys.push_back(key);
  PrevalenceModel prevalence(incidence, survival, keys, config.within_year, diag,
                             config.normalize_prevalence ? &life_table : nullptr);

  Lattice lattice;
  lattice.cells.reserve(need.size());
  for (const auto& [key, n] : need) {
    lattice.index.emplace(key, lattice.cells.size());
    LatticeCell cell;
    cell.key = key;
    cell.horizon = n;
    cell.lifetable = diagonal_survival(life_table, key, n, diag).values();
    cell.alpha = prevalence.alpha(key);
    if (cell.alpha > 0.0) {
      cell.prevalent =
          prevalent_case_survival(key, survival, prevalence, n, config.prevalent_mode, diag).values();
    }
    cell.delta_f.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 1; k <= n; ++k) cell.delta_f[k] = delta_f(incidence, key, k, diag);
    cell.overall.resize(static_cast<std::size_t>(n) + 1);
    for (int t = 0; t <= n; ++t) cell.overall[t] = survival.at(key, t, diag);
    lattice.cells.push_back(std::move(cell));
  }
  for (auto& cell : lattice.cells) {
    cell.shifted.assign(static_cast<std::size_t>(std::max(cell.horizon, 1)), -1);
    for (int k = 1; k < cell.horizon; ++k) {
      cell.shifted[k] = static_cast<int>(lattice.index.at(cell.key.shifted(k)));
    }
  }
  logger().debug("adjustment lattice: {} cells from {} base keys", lattice.cells.size(), base.size());
  return lattice;
}

namespace {

int max_horizon(const Lattice& lattice) {
  int top = 0;
  for (const auto& c : lattice.cells) top = std::max(top, c.horizon);
  return top;
}

LatticeSolution empty_solution(const Lattice& lattice) {
  LatticeSolution sol;
  for (const auto& c : lattice.cells) {
    sol.survival.emplace_back(static_cast<std::size_t>(c.horizon) + 1, 1.0);
    sol.ratio.emplace_back(static_cast<std::size_t>(c.horizon) + 1, 1.0);
  }
  return sol;
}

// 1 - Ŝ_O(t-k | z+k) / Ŝ_P(t-k | z+k)
double kernel(const Lattice& lattice, const std::vector<std::vector<double>>& sp,
              const LatticeCell& cell, int t, int k) {
  const int j = cell.shifted[k];
  return 1.0 - lattice.cells[j].overall[t - k] / sp[j][t - k];
}

// Ŝ_P(t) from r̂(t), with clipping to [floor, 1] and the monotonicity guard.
double finish_point(const LatticeCell& cell, int t, double r, double previous,
                    const AdjustmentConfig& config, bool checked, Diagnostics* diag) {
  if (checked && !(r >= config.min_ratio)) {
    throw Error(ErrorCode::kInconsistentInputs,
                "adjustment: r(t) = " + csv::format_double(r) + " at " + to_string(cell.key) +
                    ", t = " + std::to_string(t) + "; inputs are inconsistent");
  }
  double numerator = cell.lifetable[t];
  if (cell.alpha > 0.0) numerator -= cell.alpha * cell.prevalent[t];
  double v = numerator / ((1.0 - cell.alpha) * r);
  if (!(v >= config.clip_floor) || v > 1.0) {
    v = std::isnan(v) || v < config.clip_floor ? config.clip_floor : 1.0;
    if (checked) bump(diag, &Diagnostics::sp_clips);
  }
  if (v > previous) {
    v = previous;
    if (checked) bump(diag, &Diagnostics::monotonicity_guards);
  }
  if (checked && v < cell.lifetable[t]) bump(diag, &Diagnostics::sp_below_lifetable);
  return v;
}

}  // namespace

LatticeSolution solve_s_p(const Lattice& lattice, const AdjustmentConfig& config,
                          Diagnostics* diag) {
  LatticeSolution sol = empty_solution(lattice);
  const int top = max_horizon(lattice);
  for (int t = 1; t <= top; ++t) {
    for (std::size_t c = 0; c < lattice.cells.size(); ++c) {
      const auto& cell = lattice.cells[c];
      if (t > cell.horizon) continue;
      double sum = 0.0;
      for (int k = 1; k < t; ++k) sum += kernel(lattice, sol.survival, cell, t, k) * cell.delta_f[k];
      double r = 1.0 - sum;
      sol.ratio[c][t] = r;
      sol.survival[c][t] = finish_point(cell, t, r, sol.survival[c][t - 1], config, true, diag);
    }
  }
  return sol;
}

LatticeSolution solve_s_p_linear_system(const Lattice& lattice, const AdjustmentConfig& config,
                                        Diagnostics* diag) {
  LatticeSolution current = empty_solution(lattice);
  const int sweeps = max_horizon(lattice);
  for (int sweep = 1; sweep <= sweeps; ++sweep) {
    const bool last = sweep == sweeps;
    LatticeSolution next = empty_solution(lattice);
    for (std::size_t c = 0; c < lattice.cells.size(); ++c) {
      const auto& cell = lattice.cells[c];
      const int n = cell.horizon;
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
      for (int t = 1; t <= n; ++t) {
        for (int k = 1; k < t; ++k) h(t - 1, k - 1) = kernel(lattice, current.survival, cell, t, k);
      }
      Eigen::VectorXd df(n);
      for (int k = 1; k <= n; ++k) df(k - 1) = cell.delta_f[k];
      Eigen::VectorXd r = Eigen::VectorXd::Ones(n) - h.triangularView<Eigen::StrictlyLower>() * df;
      for (int t = 1; t <= n; ++t) {
        next.ratio[c][t] = r(t - 1);
        next.survival[c][t] =
            finish_point(cell, t, r(t - 1), next.survival[c][t - 1], config, last, diag);
      }
    }
    current = std::move(next);
  }
  return current;
}

double AdjustedPopulationSurvival::at(double t) const {
  if (t <= 0.0) return 1.0;
  return loglinear_at(grid_, t);
}

double AdjustedPopulationSurvival::cumulative_hazard(double t) const { return -std::log(at(t)); }

AdjustedPopulationSurvival AdjustmentResult::survival(const StratumKey& key) const {
  auto it = lattice.index.find(key);
  if (it == lattice.index.end()) {
    throw Error(ErrorCode::kInternal, "no adjusted survival for " + to_string(key));
  }
  return AdjustedPopulationSurvival(key, solution.survival[it->second]);
}

AdjustmentResult adjust_population_survival(std::span<const StratumKey> base,
                                            const LifeTable& life_table,
                                            const IncidenceTable& incidence,
                                            const OverallSurvival& survival,
                                            const AdjustmentConfig& config, Diagnostics* diag) {
  AdjustmentResult result;
  result.lattice = build_lattice(base, life_table, incidence, survival, config, diag);
  result.solution = solve_s_p(result.lattice, config, diag);
  return result;
}

GridPopulationSurvival adjusted_survival_provider(const AdjustmentResult& result,
                                                  std::span<const StratumKey> keys) {
  std::map<StratumKey, std::vector<double>> grids;
  for (const auto& key : keys) grids.emplace(key, result.survival(key).grid());
  return GridPopulationSurvival(ProviderMode::kAdjusted, std::move(grids));
}

void write_adjusted_csv(std::ostream& out, const AdjustmentResult& result,
                        std::span<const StratumKey> keys) {
  out << "age,year,sex,t,s_p,lifetable,alpha,r\n";
  for (const auto& key : keys) {
    const std::size_t c = result.lattice.index.at(key);
    const auto& cell = result.lattice.cells[c];
    for (int t = 0; t <= cell.horizon; ++t) {
      out << key.age << ',' << key.year << ',' << key.demo.at(0) << ',' << t << ','
          << csv::format_double(result.solution.survival[c][t]) << ','
          << csv::format_double(cell.lifetable[t]) << ',' << csv::format_double(cell.alpha) << ','
          << csv::format_double(result.solution.ratio[c][t]) << '\n';
    }
  }
}

}  // namespace netadjust
