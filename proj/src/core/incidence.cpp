#include "netadjust/incidence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include "csv.hpp"
#include "netadjust/error.hpp"
#include "netadjust/log.hpp"

namespace netadjust {

// ---------------------------------------------------------------------------
// IncidenceTable

IncidenceTable::IncidenceTable(LexisGrid grid) : grid_(std::move(grid)) {}

IncidenceTable IncidenceTable::from_cells(const std::vector<LexisGrid::Cell>& cells,
                                          Diagnostics* diag) {
  if (cells.empty()) throw Error(ErrorCode::kEmptyInput, "incidence table: no rows");
  int a0 = cells.front().key.age, a1 = a0;
  int y0 = cells.front().key.year, y1 = y0;
  std::set<Demographics> demos;
  std::set<StratumKey> seen;
  for (const auto& c : cells) {
    if (!(c.value >= 0.0 && c.value < 1.0)) {
      throw Error(ErrorCode::kOutOfRange, "incidence: ir=" + csv::format_double(c.value) +
                                              " outside [0,1) at " + to_string(c.key));
    }
    if (!seen.insert(c.key).second) {
      throw Error(ErrorCode::kDuplicateKey, "incidence: duplicate row " + to_string(c.key));
    }
    a0 = std::min(a0, c.key.age);
    a1 = std::max(a1, c.key.age);
    y0 = std::min(y0, c.key.year);
    y1 = std::max(y1, c.key.year);
    demos.insert(c.key.demo);
  }
  LexisGrid grid(a0, a1, y0, y1, {demos.begin(), demos.end()}, 0.0);
  for (const auto& c : cells) grid.set(c.key, c.value);
  std::size_t missing = grid.cell_count() - seen.size();
  if (missing > 0) {
    logger().warn("incidence: {} cells absent from input default to 0", missing);
    if (diag != nullptr) diag->missing_incidence_cells += missing;
  }
  return IncidenceTable(std::move(grid));
}

double IncidenceTable::ir(const StratumKey& key, Diagnostics* diag) const {
  return grid_.at(key, diag != nullptr ? &diag->incidence_clamps : nullptr);
}

IncidenceTable compute_incidence(const CountTable& diagnoses, const CountTable& person_years,
                                 Diagnostics* diag) {
  if (diagnoses.empty() && person_years.empty()) {
    throw Error(ErrorCode::kEmptyInput, "compute_incidence: no counts");
  }
  std::set<StratumKey> keys;
  for (const auto& [k, v] : diagnoses) keys.insert(k);
  for (const auto& [k, v] : person_years) keys.insert(k);

  std::vector<LexisGrid::Cell> cells;
  for (const auto& key : keys) {
    auto d_it = diagnoses.find(key);
    auto p_it = person_years.find(key);
    double d = d_it == diagnoses.end() ? 0.0 : d_it->second;
    double py = p_it == person_years.end() ? 0.0 : p_it->second;
    if (d < 0.0 || py < 0.0) {
      throw Error(ErrorCode::kOutOfRange, "compute_incidence: negative count at " + to_string(key));
    }
    double ir = 0.0;
    if (d > 0.0) {
      if (!(py > 0.0)) {
        throw Error(ErrorCode::kInconsistentInputs,
                    "compute_incidence: diagnoses without person-years at " + to_string(key));
      }
      ir = d / py;
    }
    if (ir > kIncidenceCeiling) {
      logger().warn("incidence {} at {} clipped below 1", ir, to_string(key));
      bump(diag, &Diagnostics::incidence_clips);
      ir = kIncidenceCeiling;
    }
    cells.push_back({key, ir});
  }
  return IncidenceTable::from_cells(cells, diag);
}

IncidenceTable read_incidence_csv(std::istream& in, Diagnostics* diag) {
  return IncidenceTable::from_cells(read_lexis_cells(in, "incidence", "ir"), diag);
}

IncidenceTable load_incidence(const std::string& path, Diagnostics* diag) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open incidence file " + path);
  return read_incidence_csv(in, diag);
}

void write_incidence_csv(std::ostream& out, const IncidenceTable& table) {
  out << "age,year,sex,ir\n";
  table.grid().for_each([&](const StratumKey& key, double ir) {
    out << key.age << ',' << key.year << ',' << key.demo.at(0) << ',' << csv::format_double(ir)
        << '\n';
  });
}

CountTable read_count_csv(std::istream& in, const std::string& source,
                          const std::string& value_column) {
  CountTable out;
  for (auto& cell : read_lexis_cells(in, source, value_column)) {
    if (!out.emplace(cell.key, cell.value).second) {
      throw Error(ErrorCode::kDuplicateKey, source + ": duplicate row " + to_string(cell.key));
    }
  }
  return out;
}

CountTable load_counts(const std::string& path, const std::string& value_column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open count file " + path);
  return read_count_csv(in, path, value_column);
}

// ---------------------------------------------------------------------------
// Prevalence

namespace {

StratumKey cell_on_diagonal(int cohort, const Demographics& demo, int age) {
  return {age, cohort + age, demo};
}

}  // namespace

PrevalenceModel::PrevalenceModel(const IncidenceTable& incidence, const OverallSurvival& survival,
                                 std::span<const StratumKey> keys, WithinYearApprox approx,
                                 Diagnostics* diag, const LifeTable* population)
    : incidence_(&incidence), survival_(&survival), approx_(approx), diag_(diag) {
  std::map<Diagonal, int> max_age;
  for (const auto& key : keys) {
    if (key.age < 0) throw Error(ErrorCode::kInvalidArgument, "prevalence: negative age");
    auto& m = max_age[{key.cohort(), key.demo}];
    m = std::max(m, key.age);
  }
  for (const auto& [diagonal, top] : max_age) {
    const auto& [cohort, demo] = diagonal;
    std::vector<double> log_pop;
    if (population != nullptr) {
      log_pop.assign(static_cast<std::size_t>(top) + 1, 0.0);
      for (int a = 1; a <= top; ++a) {
        log_pop[a] = log_pop[a - 1] + std::log1p(-population->q(cell_on_diagonal(cohort, demo, a - 1), diag));
      }
    }
    std::vector<double> alpha(static_cast<std::size_t>(top) + 1, 0.0);
    for (int a = 1; a <= top; ++a) {
      double sum = 0.0;
      for (int s = 1; s <= a; ++s) {
        sum += lag_term(cell_on_diagonal(cohort, demo, a - s), s, alpha[a - s], log_pop);
      }
      if (!(sum < 1.0)) {
        throw Error(ErrorCode::kInconsistentInputs,
                    "prevalence reached " + csv::format_double(sum) + " at " +
                        to_string(cell_on_diagonal(cohort, demo, a)) +
                        "; incidence and survival inputs are inconsistent");
      }
      alpha[a] = sum;
    }
    alpha_.emplace(diagonal, std::move(alpha));
    log_population_.emplace(diagonal, std::move(log_pop));
  }
}

double PrevalenceModel::lag_term(const StratumKey& origin_cell, int lag, double alpha_origin,
                                 const std::vector<double>& log_population) const {
  double t = approx_ == WithinYearApprox::kYearStart ? lag : lag - 0.5;
  double term = survival_->at(origin_cell, t, diag_) * incidence_->ir(origin_cell, diag_) *
                (1.0 - alpha_origin);
  if (!log_population.empty() && term > 0.0) {
    const double log_s = log_population[origin_cell.age + lag] - log_population[origin_cell.age];
    if (!std::isfinite(log_s)) return 0.0;
    term /= std::exp(log_s);
  }
  return term;
}

double PrevalenceModel::alpha(const StratumKey& key) const {
  auto it = alpha_.find({key.cohort(), key.demo});
  if (it == alpha_.end() || key.age < 0 || key.age >= static_cast<int>(it->second.size())) {
    throw Error(ErrorCode::kInternal, "prevalence not prepared for " + to_string(key));
  }
  return it->second[static_cast<std::size_t>(key.age)];
}

std::vector<double> PrevalenceModel::lag_weights(const StratumKey& key) const {
  auto it = alpha_.find({key.cohort(), key.demo});
  if (it == alpha_.end() || key.age < 0 || key.age >= static_cast<int>(it->second.size())) {
    throw Error(ErrorCode::kInternal, "prevalence not prepared for " + to_string(key));
  }
  const auto& alpha = it->second;
  std::vector<double> w(static_cast<std::size_t>(key.age) + 1, 0.0);
  for (int s = 1; s <= key.age; ++s) {
    w[s] = lag_term(key.shifted(-s), s, alpha[key.age - s],
                    log_population_.at({key.cohort(), key.demo}));
  }
  return w;
}

double prevalence_alpha(const PrevalenceModel& model, const StratumKey& key) {
  return model.alpha(key);
}

double f_d_to_l(const PrevalenceModel& model, const StratumKey& key, int t) {
  double alpha = model.alpha(key);
  if (!(alpha > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "F_D->L undefined: zero prevalence at " + to_string(key));
  }
  if (t <= 0) return 0.0;
  auto w = model.lag_weights(key);
  int top = std::min<int>(t, key.age);
  double sum = 0.0;
  for (int s = 1; s <= top; ++s) sum += w[s];
  return std::min(1.0, sum / alpha);
}

double f_l_to_d(const IncidenceTable& incidence, const StratumKey& key, int t, Diagnostics* diag) {
  if (t < 0) throw Error(ErrorCode::kInvalidArgument, "F_L->D: t must be >= 0");
  double survive = 1.0;
  for (int s = 0; s < t; ++s) survive *= 1.0 - incidence.ir(key.shifted(s), diag);
  return 1.0 - survive;
}

double delta_f(const IncidenceTable& incidence, const StratumKey& key, int k, Diagnostics* diag) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "delta_f: k must be >= 1");
  // Π_{s<k-1}(1 - IR) * IR(z_{L+k-1}), identical to the difference of CDFs.
  double survive = 1.0;
  for (int s = 0; s < k - 1; ++s) survive *= 1.0 - incidence.ir(key.shifted(s), diag);
  return survive * incidence.ir(key.shifted(k - 1), diag);
}

}  // namespace netadjust
