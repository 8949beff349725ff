#include "netadjust/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "csv.hpp"
#include "netadjust/error.hpp"
#include "netadjust/log.hpp"

namespace netadjust {

double Curve::at(double t) const {
  if (times.empty()) throw Error(ErrorCode::kInternal, "empty curve");
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return values.front();
  return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

namespace {

// Records grouped by covariate key and walked through the evaluation grid.
class RiskSetWalk {
 public:
  RiskSetWalk(std::span<const PatientRecord> records, const PopulationSurvivalProvider& provider,
              const EstimatorOptions& options)
      : provider_(provider), log_cap_(std::log(options.weight_cap)) {
    if (records.empty()) throw Error(ErrorCode::kEmptyInput, "estimator: no records");
    if (!(options.weight_cap >= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "estimator: weight cap must be >= 1");
    }
    std::map<StratumKey, int> groups;
    order_.resize(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      if (!(r.time >= 0.0) || !std::isfinite(r.time)) {
        throw Error(ErrorCode::kOutOfRange, "estimator: invalid follow-up time");
      }
      auto [it, inserted] = groups.emplace(r.key(), static_cast<int>(keys_.size()));
      if (inserted) keys_.push_back(r.key());
      order_[i] = {r.time, r.event, it->second};
    }
    std::stable_sort(order_.begin(), order_.end(),
                     [](const Entry& a, const Entry& b) { return a.time < b.time; });
    at_risk_.assign(keys_.size(), 0);
    total_.assign(keys_.size(), 0);
    for (const auto& e : order_) {
      ++at_risk_[e.group];
      ++total_[e.group];
    }
    y_ = static_cast<double>(order_.size());

    std::vector<double> grid{0.0};
    for (const auto& e : order_) grid.push_back(e.time);
    for (double y : options.report_years) {
      if (y > 0.0 && std::isfinite(y)) grid.push_back(y);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    grid_ = std::move(grid);
    lam_prev_.assign(keys_.size(), 0.0);
    lam_cur_.assign(keys_.size(), 0.0);
  }

  const std::vector<double>& grid() const { return grid_; }
  std::size_t groups() const { return keys_.size(); }
  int at_risk(std::size_t g) const { return at_risk_[g]; }
  int total(std::size_t g) const { return total_[g]; }
  double risk_set() const { return y_; }
  double lambda_prev(std::size_t g) const { return lam_prev_[g]; }
  double lambda_cur(std::size_t g) const { return lam_cur_[g]; }
  const std::vector<int>& deaths() const { return deaths_; }
  int death_count() const { return death_count_; }

  // Moves to grid point j >= 1: drops subjects with T < grid[j], evaluates the
  // capped population hazard there and tallies deaths at exactly grid[j].
  void advance(std::size_t j, Diagnostics* diag) {
    const double b = grid_[j];
    while (next_ < order_.size() && order_[next_].time < b) {
      --at_risk_[order_[next_].group];
      y_ -= 1.0;
      ++next_;
    }
    lam_prev_.swap(lam_cur_);
    for (std::size_t g = 0; g < keys_.size(); ++g) {
      double lam = provider_.cumulative_hazard(keys_[g], b);
      if (!(lam <= log_cap_)) {
        lam = log_cap_;
        if (at_risk_[g] > 0) bump(diag, &Diagnostics::weight_caps);
      }
      lam_cur_[g] = lam;
    }
    deaths_.assign(keys_.size(), 0);
    death_count_ = 0;
    for (std::size_t i = next_; i < order_.size() && order_[i].time == b; ++i) {
      if (order_[i].event) {
        ++deaths_[order_[i].group];
        ++death_count_;
      }
    }
  }

 private:
  struct Entry {
    double time;
    bool event;
    int group;
  };

  const PopulationSurvivalProvider& provider_;
  double log_cap_;
  std::vector<StratumKey> keys_;
  std::vector<Entry> order_;
  std::vector<double> grid_;
  std::vector<int> at_risk_, total_, deaths_;
  std::vector<double> lam_prev_, lam_cur_;
  std::size_t next_ = 0;
  double y_ = 0.0;
  int death_count_ = 0;
};

// log Σ_g n_g exp(lam_g), over groups with n_g > 0.
template <class Lam>
double log_weighted_risk(const RiskSetWalk& walk, Lam lam) {
  double top = -INFINITY;
  for (std::size_t g = 0; g < walk.groups(); ++g) {
    if (walk.at_risk(g) > 0) top = std::max(top, lam(g));
  }
  double sum = 0.0;
  for (std::size_t g = 0; g < walk.groups(); ++g) {
    if (walk.at_risk(g) > 0) sum += walk.at_risk(g) * std::exp(lam(g) - top);
  }
  return top + std::log(sum);
}

NetSurvivalEstimate finish(std::vector<double> times, std::vector<double> lambda) {
  NetSurvivalEstimate est;
  std::vector<double> surv(lambda.size());
  std::transform(lambda.begin(), lambda.end(), surv.begin(), [](double l) { return std::exp(-l); });
  est.survival = {times, std::move(surv)};
  est.cumulative_hazard = {std::move(times), std::move(lambda)};
  return est;
}

}  // namespace

NetSurvivalEstimate pohar_perme(std::span<const PatientRecord> records,
                                const PopulationSurvivalProvider& provider,
                                const EstimatorOptions& options, Diagnostics* diag) {
  RiskSetWalk walk(records, provider, options);
  const auto& grid = walk.grid();
  std::vector<double> lambda(grid.size(), 0.0);
  double acc = 0.0;
  for (std::size_t j = 1; j < grid.size(); ++j) {
    walk.advance(j, diag);
    if (walk.risk_set() <= 0.0) {
      if (walk.death_count() > 0) {
        logger().warn("pohar-perme: empty risk set at t={}", grid[j]);
        bump(diag, &Diagnostics::empty_risk_sets);
      }
      lambda[j] = acc;
      continue;
    }
    // Σ Y_i w_i dΛ_i / Σ Y_j w_j = d log D with D = Σ Y_j w_j, w = exp(Λ_P).
    double log_d_b = log_weighted_risk(walk, [&](std::size_t g) { return walk.lambda_cur(g); });
    double log_d_a = log_weighted_risk(walk, [&](std::size_t g) { return walk.lambda_prev(g); });
    acc -= log_d_b - log_d_a;
    if (walk.death_count() > 0) {
      double events = 0.0;
      for (std::size_t g = 0; g < walk.groups(); ++g) {
        if (walk.deaths()[g] > 0) events += walk.deaths()[g] * std::exp(walk.lambda_cur(g) - log_d_b);
      }
      acc += events;
    }
    lambda[j] = acc;
  }
  return finish(grid, std::move(lambda));
}

NetSurvivalEstimate ederer1(std::span<const PatientRecord> records,
                            const PopulationSurvivalProvider& provider,
                            const EstimatorOptions& options, Diagnostics* diag) {
  RiskSetWalk walk(records, provider, options);
  const auto& grid = walk.grid();
  const double n = static_cast<double>(records.size());
  std::vector<double> lambda(grid.size(), 0.0);
  double nelson_aalen = 0.0;
  for (std::size_t j = 1; j < grid.size(); ++j) {
    walk.advance(j, diag);
    if (walk.death_count() > 0) nelson_aalen += walk.death_count() / walk.risk_set();
    // ∫ Σ S_i dΛ_i / Σ S_j = -log(mean S_j), over the whole cohort.
    double expected = 0.0;
    for (std::size_t g = 0; g < walk.groups(); ++g) {
      expected += walk.total(g) * std::exp(-walk.lambda_cur(g));
    }
    lambda[j] = nelson_aalen + std::log(expected / n);
  }
  return finish(grid, std::move(lambda));
}

CrudeProbabilityEstimate crude_probability(std::span<const PatientRecord> records,
                                           const PopulationSurvivalProvider& provider,
                                           const EstimatorOptions& options, Diagnostics* diag) {
  RiskSetWalk walk(records, provider, options);
  const auto& grid = walk.grid();
  std::vector<double> raw(grid.size(), 0.0), other(grid.size(), 0.0);
  double km = 1.0, f = 0.0, g_other = 0.0;
  for (std::size_t j = 1; j < grid.size(); ++j) {
    walk.advance(j, diag);
    const double y = walk.risk_set();
    if (y > 0.0) {
      // Ŝ_O is constant on the open interval and equals its left limit at the
      // grid point, so both pieces share the same factor.
      double expected = 0.0;
      for (std::size_t g = 0; g < walk.groups(); ++g) {
        if (walk.at_risk(g) > 0) {
          expected += walk.at_risk(g) * (walk.lambda_cur(g) - walk.lambda_prev(g));
        }
      }
      expected /= y;
      double hazard = walk.death_count() / y;
      f += km * (hazard - expected);
      g_other += km * expected;
      km *= 1.0 - hazard;
    }
    raw[j] = f;
    other[j] = g_other;
  }
  CrudeProbabilityEstimate est;
  est.isotonic = {grid, isotonic_increasing(raw)};
  est.raw = {grid, std::move(raw)};
  est.noncancer = {grid, std::move(other)};
  return est;
}

std::vector<double> isotonic_increasing(std::span<const double> values) {
  struct Block {
    double mean;
    std::size_t size;
  };
  std::vector<Block> blocks;
  for (double v : values) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      double total = static_cast<double>(prev.size + top.size);
      prev.mean = (prev.mean * prev.size + top.mean * top.size) / total;
      prev.size += top.size;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& b : blocks) out.insert(out.end(), b.size, b.mean);
  return out;
}

std::vector<YearValue> evaluate_at_years(const Curve& curve, std::span<const double> years) {
  std::vector<YearValue> out;
  out.reserve(years.size());
  for (double y : years) out.push_back({y, curve.at(y)});
  return out;
}

void write_estimate_csv(std::ostream& out, std::span<const EstimateRow> rows) {
  out << "estimator,provider,year,value\n";
  for (const auto& r : rows) {
    out << r.estimator << ',' << r.provider << ',' << csv::format_double(r.year) << ','
        << csv::format_double(r.value) << '\n';
  }
}

void write_curve_csv(std::ostream& out, const NetSurvivalEstimate& estimate) {
  out << "t,lambda,e_s\n";
  const auto& t = estimate.cumulative_hazard.times;
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << csv::format_double(t[i]) << ',' << csv::format_double(estimate.cumulative_hazard.values[i])
        << ',' << csv::format_double(estimate.survival.values[i]) << '\n';
  }
}

}  // namespace netadjust
