// Acceptance harness: one PASS/FAIL line per criterion.
//
//   acceptance [--jobs N] [--only 1,4,...] [--known-failure N]...
//
// The exit status is 0 when every selected criterion passes or is listed as a
// known failure. Known failures still print FAIL.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "netadjust/adjustment.hpp"
#include "netadjust/error.hpp"
#include "netadjust/estimators.hpp"
#include "netadjust/extrapolation.hpp"
#include "netadjust/incidence.hpp"
#include "netadjust/population.hpp"
#include "netadjust/simulation.hpp"
#include "support.hpp"

using namespace netadjust;
using namespace netadjust::sim;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

int g_jobs = 1;

const MethodSummary& row(const ExperimentResult& r, const std::string& method, double year) {
  for (const auto& m : r.rows)
    if (m.method == method && m.year == year) return m;
  throw Error(ErrorCode::kInternal, "missing table row " + method);
}

ScenarioConfig experiment(int dataset) {
  ScenarioConfig cfg;
  cfg.dataset = dataset;
  cfg.cohort_size = 50000;
  cfg.reps = 200;
  cfg.jobs = g_jobs;
  return cfg;
}

// Experiments are shared between criteria 2 and 3.
const ExperimentResult& cached_experiment(int dataset) {
  static std::map<int, ExperimentResult> cache;
  auto it = cache.find(dataset);
  if (it == cache.end()) it = cache.emplace(dataset, run_experiment(experiment(dataset))).first;
  return it->second;
}

std::vector<StratumKey> window_keys() {
  std::vector<StratumKey> keys;
  for (int g = 0; g < 2; ++g)
    for (int a = 60; a < 75; ++a) keys.push_back({a, 1960 + a, {g}});
  return keys;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Largest gap over both curves' jump times up to `until`.
double curve_diff(const Curve& a, const Curve& b, double until = INFINITY) {
  std::vector<double> ts = a.times;
  ts.insert(ts.end(), b.times.begin(), b.times.end());
  double m = 0.0;
  for (double t : ts)
    if (t <= until) m = std::max(m, std::abs(a.at(t) - b.at(t)));
  return m;
}

double last_time(const std::vector<PatientRecord>& records) {
  double t = 0.0;
  for (const auto& r : records) t = std::max(t, r.time);
  return t;
}

// 1 ---------------------------------------------------------------------------
Outcome table2_high_incidence() {
  const auto& r = cached_experiment(2);
  Outcome o;
  o.require(r.excluded == 0, fmt("excluded %d", r.excluded));
  const double naive = row(r, "naive_pp", 10).pct_bias, adj = row(r, "adjusted_pp", 10).pct_bias;
  o.require(naive >= 15 && naive <= 24, fmt("naive y10 %%bias %.2f in [15, 24]", naive));
  o.require(adj >= -2 && adj <= 6, fmt("adjusted y10 %%bias %.2f in [-2, 6]", adj));
  for (double y : {5.0, 7.0, 10.0}) {
    const double a = row(r, "adjusted_pp", y).rmse, n = row(r, "naive_pp", y).rmse;
    o.require(a < n, fmt("y%g rMSE adjusted %.4f < naive %.4f", y, a, n));
  }
  return o;
}

// 2 ---------------------------------------------------------------------------
Outcome table2_low_incidence() {
  const auto& r = cached_experiment(1);
  Outcome o;
  o.require(r.excluded == 0, fmt("excluded %d", r.excluded));
  const double naive = row(r, "naive_pp", 10).pct_bias, adj = row(r, "adjusted_pp", 10).pct_bias;
  o.require(naive >= 3 && naive <= 9, fmt("naive y10 %%bias %.2f in [3, 9]", naive));
  o.require(adj >= -2 && adj <= 3, fmt("adjusted y10 %%bias %.2f in [-2, 3]", adj));
  return o;
}

// 3 ---------------------------------------------------------------------------
Outcome table1_counts() {
  const auto& r = cached_experiment(1);
  Outcome o;
  o.require(r.patients.median >= 1572 && r.patients.median <= 1836,
            fmt("median patients %.1f in [1572, 1836]", r.patients.median));
  o.require(r.events.median >= 771 && r.events.median <= 970,
            fmt("median events %.1f in [771, 970]", r.events.median));
  o.require(r.excluded == 0, fmt("excluded %d", r.excluded));
  return o;
}

// 4 ---------------------------------------------------------------------------
IncidenceTable zero_incidence(int age_hi, int year_lo, int year_hi, int sexes) {
  return support::incidence(age_hi, year_lo, year_hi, [](int, int, int) { return 0.0; }, sexes);
}

// Returns the largest deviation of Ŝ_P from the diagonal and of adjusted PP
// from naive PP.
std::pair<double, double> null_adjustment(const std::vector<PatientRecord>& records,
                                          const LifeTable& lt, const IncidenceTable& ir) {
  RegistryOverallSurvival so(build_strata(records, Banding{}), ExtrapolationConfig{});
  auto keys = record_keys(records);
  AdjustmentConfig cfg;
  cfg.horizon = std::max(1, follow_up_horizon(records));
  auto res = adjust_population_survival(keys, lt, ir, so, cfg);
  double sp_dev = 0.0;
  for (const auto& k : keys)
    sp_dev = std::max(sp_dev, max_abs_diff(res.survival(k).grid(),
                                           diagonal_survival(lt, k, cfg.horizon).values()));
  auto naive = make_naive_provider(lt, keys, cfg.horizon);
  auto adjusted = adjusted_survival_provider(res, keys);
  EstimatorOptions opts;
  opts.report_years = {1, 3, 5, 7, 10};
  auto a = pohar_perme(records, naive, opts), b = pohar_perme(records, adjusted, opts);
  const double pp_dev = std::max(curve_diff(a.survival, b.survival),
                                 curve_diff(a.cumulative_hazard, b.cumulative_hazard));
  return {sp_dev, pp_dev};
}

Outcome null_adjustment_identity() {
  double sp_dev = 0.0, pp_dev = 0.0;
  int registries = 0;
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial, ++registries) {
    const double q0 = 0.002 + 0.02 * u(rng), qa = 0.001 * u(rng);
    auto lt = support::life_table(
        120, 1900, 2080, [&](int a, int y, int s) { return std::min(0.95, q0 + qa * a + 0.002 * s + 1e-5 * (y % 7)); }, 2);
    std::vector<int> ages;
    for (int a = 30; a <= 85; a += 1 + static_cast<int>(5 * u(rng))) ages.push_back(a);
    auto records = support::random_registry(rng, 100 + static_cast<int>(900 * u(rng)), ages,
                                            1930 + static_cast<int>(40 * u(rng)), 2,
                                            0.02 + 0.4 * u(rng), 2.0 + 14.0 * u(rng));
    auto [s, p] = null_adjustment(records, lt, zero_incidence(120, 1900, 2080, 2));
    sp_dev = std::max(sp_dev, s);
    pp_dev = std::max(pp_dev, p);
  }
  for (int dataset : {1, 2}) {
    ScenarioConfig cfg = experiment(dataset);
    auto cohort = generate_cohort(cfg, cfg.seed);
    auto tables = derive_tables(cohort, cfg);
    auto records = make_registry(cohort, cfg, cfg.seed + 1000000);
    auto [s, p] = null_adjustment(records, tables.life_table,
                                  zero_incidence(tables.max_age, 1960, 1960 + tables.max_age, 2));
    sp_dev = std::max(sp_dev, s);
    pp_dev = std::max(pp_dev, p);
    ++registries;
  }
  Outcome o;
  o.require(sp_dev <= 1e-12, fmt("max |S_P - diagonal| %.2e <= 1e-12", sp_dev));
  o.require(pp_dev <= 1e-12, fmt("max |adjusted PP - naive PP| %.2e <= 1e-12", pp_dev));
  o.detail += fmt("; %d registries", registries);
  return o;
}

// 5 ---------------------------------------------------------------------------
Outcome solver_oracle() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int solved = 0, inconsistent = 0, cells = 0;
  double worst = 0.0;
  while (solved < 1000) {
    const double q0 = 0.001 + 0.02 * u(rng), qa = 0.0008 * u(rng);
    const double i0 = 0.004 * u(rng), ia = 0.0003 * u(rng);
    const double rate = 0.01 + 0.4 * u(rng), age_slope = 0.04 * u(rng);
    auto lt = support::life_table(
        120, 1880, 2080, [&](int a, int y, int s) { return std::min(0.95, q0 + qa * a + 0.002 * s + 1e-5 * (y % 5)); }, 2);
    auto ir = support::incidence(
        120, 1880, 2080, [&](int a, int y, int s) { return i0 + ia * a * (1 + s) + 1e-6 * (y % 3); }, 2);
    support::FnSurvival so([&](const StratumKey& k, double t) {
      return std::exp(-rate * (1.0 + age_slope * (k.age - 60) / 10.0 + 0.1 * k.demo.at(0)) * t);
    });
    std::vector<StratumKey> base;
    const int n_base = 1 + static_cast<int>(5 * u(rng));
    for (int j = 0; j < n_base; ++j)
      base.push_back({20 + static_cast<int>(70 * u(rng)), 1950 + static_cast<int>(60 * u(rng)),
                      {static_cast<int>(2 * u(rng))}});
    AdjustmentConfig cfg;
    cfg.horizon = 1 + static_cast<int>(20 * u(rng));
    cfg.prevalent_mode = u(rng) < 0.5 ? PrevalentSurvivalMode::kConditional
                                      : PrevalentSurvivalMode::kUnconditional;
    cfg.within_year = u(rng) < 0.5 ? WithinYearApprox::kMidYear : WithinYearApprox::kYearStart;
    cfg.normalize_prevalence = u(rng) < 0.5;
    try {
      auto lattice = build_lattice(base, lt, ir, so, cfg);
      Diagnostics d1, d2;
      auto a = solve_s_p(lattice, cfg, &d1);
      auto b = solve_s_p_linear_system(lattice, cfg, &d2);
      for (std::size_t c = 0; c < a.survival.size(); ++c) {
        worst = std::max(worst, max_abs_diff(a.survival[c], b.survival[c]));
        worst = std::max(worst, max_abs_diff(a.ratio[c], b.ratio[c]));
      }
      if (a.survival.size() != b.survival.size()) worst = INFINITY;
      cells += static_cast<int>(lattice.cells.size());
      ++solved;
    } catch (const Error& e) {
      // Random survival curves can outlive the population, which the
      // prevalence step rejects; those draws are replaced.
      if (e.code() != ErrorCode::kInconsistentInputs) throw;
      ++inconsistent;
    }
  }
  Outcome o;
  o.require(worst <= 1e-12, fmt("max |recursion - linear system| %.2e <= 1e-12", worst));
  o.detail += fmt("; %d lattices (%d cells), %d inconsistent draws replaced", solved, cells,
                  inconsistent);
  return o;
}

// 6 ---------------------------------------------------------------------------
struct Binomial {
  double hits = 0.0, n = 0.0;
  double p() const { return hits / n; }
  double se() const { return std::sqrt(p() * (1.0 - p()) / n); }
};

// z-score of an estimate against a direct proportion; a degenerate direct
// proportion requires exact agreement.
double zscore(double estimate, const Binomial& b) {
  if (b.n == 0) return INFINITY;
  const double se = b.se();
  if (se == 0.0) return estimate == b.p() ? 0.0 : INFINITY;
  return (estimate - b.p()) / se;
}

Outcome prevalence_oracles() {
  Outcome o;
  const std::vector<int> d_to_l_lags{1, 2, 5, 10, 20};
  const std::vector<int> l_to_d_lags{1, 5, 10};
  for (int dataset : {1, 2}) {
    ScenarioConfig cfg = experiment(dataset);
    cfg.cohort_size = 200000;
    auto cohort = generate_cohort(cfg, cfg.seed + 77);
    auto tables = derive_tables(cohort, cfg);
    // Overall survival from every diagnosed subject, uncensored, so that the
    // comparison isolates the prevalence recursions from tail extrapolation.
    RegistryOverallSurvival so(build_strata(full_registry(cohort, cfg), Banding{}),
                               ExtrapolationConfig{});
    const AdjustmentConfig defaults;
    auto keys = window_keys();
    PrevalenceModel model(tables.incidence, so, keys, defaults.within_year, nullptr,
                          defaults.normalize_prevalence ? &tables.life_table : nullptr);
    double za = 0.0, zd = 0.0, zl = 0.0;
    int tests = 0;
    for (const auto& k : keys) {
      const int g = k.demo.at(0);
      const double a = k.age;
      Binomial alpha;
      std::vector<Binomial> dl(d_to_l_lags.size()), ld(l_to_d_lags.size());
      for (const auto& s : cohort) {
        if (s.gender != g || s.death_age() <= a) continue;
        alpha.n += 1;
        if (s.diagnosed() && s.t_d < a) {
          alpha.hits += 1;
          for (std::size_t i = 0; i < d_to_l_lags.size(); ++i) {
            dl[i].n += 1;
            dl[i].hits += a - s.t_d <= d_to_l_lags[i];
          }
        } else {
          for (std::size_t i = 0; i < l_to_d_lags.size(); ++i) {
            ld[i].n += 1;
            ld[i].hits += s.t_d < a + l_to_d_lags[i];
          }
        }
      }
      za = std::max(za, std::abs(zscore(model.alpha(k), alpha)));
      for (std::size_t i = 0; i < d_to_l_lags.size(); ++i)
        zd = std::max(zd, std::abs(zscore(f_d_to_l(model, k, d_to_l_lags[i]), dl[i])));
      for (std::size_t i = 0; i < l_to_d_lags.size(); ++i)
        zl = std::max(zl, std::abs(zscore(f_l_to_d(tables.incidence, k, l_to_d_lags[i]), ld[i])));
      tests += 1 + static_cast<int>(d_to_l_lags.size() + l_to_d_lags.size());
    }
    o.require(za <= 3.0, fmt("D%d alpha max|z| %.2f", dataset, za));
    o.require(zd <= 3.0, fmt("D%d F_D->L max|z| %.2f", dataset, zd));
    o.require(zl <= 3.0, fmt("D%d F_L->D max|z| %.2f", dataset, zl));
    o.detail += fmt(" (%d comparisons)", tests);
  }
  return o;
}

// 7 ---------------------------------------------------------------------------
Outcome extrapolation_exactness() {
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double rate_err = 0.0, value_err = 0.0, grid_err = 0.0, between_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double lambda = trial == 0 ? 0.0 : 0.8 * u(rng);
    const double tau = 2.0 + 18.0 * u(rng);
    const int h = 2 + static_cast<int>(9 * u(rng));
    std::vector<double> times, values;
    for (double t = 0.25; t <= tau; t += 0.25) {
      times.push_back(t);
      values.push_back(std::exp(-lambda * t));
    }
    StepSurvivalCurve curve(times, values);
    auto anchors = select_anchor_points(curve, tau, h);
    auto fit = fit_tail(curve, anchors);
    rate_err = std::max({rate_err, std::abs(fit.gamma1 - lambda), std::abs(fit.gamma0)});
    ExtendedSurvival ext(curve, tau, fit);
    for (int j = 0; j < 20; ++j) {
      const double t = tau + 40.0 * u(rng);
      value_err = std::max(value_err, std::abs(ext.at(t) - std::exp(-lambda * t)));
    }

    std::vector<double> grid, noisy;
    for (int i = 0; i <= 15; ++i) {
      grid.push_back(std::exp(-lambda * i));
      noisy.push_back(i == 0 ? 1.0 : noisy.back() * (0.5 + 0.5 * u(rng)));
    }
    for (int i = 0; i <= 15; ++i) {
      grid_err = std::max(grid_err, std::abs(loglinear_interpolate(noisy, i) - noisy[i]));
      grid_err = std::max(grid_err, std::abs(loglinear_interpolate(grid, i) - grid[i]));
    }
    for (int j = 0; j < 20; ++j) {
      const double t = 15.0 * u(rng);
      between_err = std::max(between_err, std::abs(loglinear_interpolate(grid, t) - std::exp(-lambda * t)));
    }
  }
  Outcome o;
  o.require(rate_err <= 1e-10, fmt("tail coefficients error %.2e <= 1e-10", rate_err));
  o.require(value_err <= 1e-10, fmt("tail values error %.2e <= 1e-10", value_err));
  o.require(grid_err == 0.0, fmt("interpolation at grid points error %.2e == 0", grid_err));
  o.require(between_err <= 1e-10, fmt("interpolation between points error %.2e <= 1e-10", between_err));
  o.detail += "; 1000 random exponentials";
  return o;
}

// 8 ---------------------------------------------------------------------------
Outcome convergence() {
  const std::vector<int> sizes{12500, 50000, 200000};
  const std::vector<double> ts{1, 5, 10};
  std::vector<double> mae;
  for (int n : sizes) {
    ScenarioConfig cfg = experiment(2);
    cfg.cohort_size = n;
    const auto keys = window_keys();
    AdjustmentConfig acfg;
    acfg.extrapolation.points = cfg.extrapolation_points;
    double sum = 0.0, count = 0.0;
    for (int r = 0; r < 20; ++r) {
      auto cohort = generate_cohort(cfg, cfg.seed + r);
      auto tables = derive_tables(cohort, cfg);
      auto cases = registered_cases(cohort, cfg, cfg.seed + 1000000 + r);
      RegistryOverallSurvival so(build_strata(cases, Banding{}), acfg.extrapolation);
      auto res = adjust_population_survival(keys, tables.life_table, tables.incidence, so, acfg);
      for (const auto& k : keys) {
        auto s = res.survival(k);
        for (double t : ts) {
          sum += std::abs(s.at(t) - true_population_survival(cfg.dataset, k.age, t));
          count += 1;
        }
      }
    }
    mae.push_back(sum / count);
  }
  Outcome o;
  o.require(mae[1] < mae[0] && mae[2] < mae[1],
            fmt("D2 mean |S_P - truth| %.5f > %.5f > %.5f", mae[0], mae[1], mae[2]));
  return o;
}

// 9 ---------------------------------------------------------------------------
Outcome estimator_reductions() {
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double unit_pp = 0.0, unit_e1 = 0.0, single = 0.0, crude = 0.0;
  auto lt = support::life_table(120, 1900, 2080, [](int a, int, int s) { return 0.002 + 0.0004 * a + 0.001 * s; }, 2);
  UnitPopulationSurvival unit;
  for (int trial = 0; trial < 50; ++trial) {
    const double hazard = 0.05 + 0.5 * u(rng);
    auto records = support::random_registry(rng, 50 + static_cast<int>(500 * u(rng)),
                                            {55, 60, 65, 70, 75}, 1940, 2, hazard,
                                            1.0 + 15.0 * u(rng));
    EstimatorOptions opts;
    opts.report_years = {1, 2, 5};
    auto na = nelson_aalen(EventTable::from_records(records));
    auto pp = pohar_perme(records, unit, opts), e1 = ederer1(records, unit, opts);
    for (double t : pp.survival.times) unit_pp = std::max(unit_pp, std::abs(pp.survival.at(t) - std::exp(-na.at(t))));
    for (double t : e1.survival.times) unit_e1 = std::max(unit_e1, std::abs(e1.survival.at(t) - std::exp(-na.at(t))));

    auto one = records;
    for (auto& r : one) r = {62, 2002, {1}, r.time, r.event};
    auto keys = record_keys(one);
    auto naive = make_naive_provider(lt, keys, follow_up_horizon(one));
    // Past the last observation PP has no risk set while E1 keeps subtracting
    // the expected hazard; the identity is about the observed range.
    single = std::max(single, curve_diff(pohar_perme(one, naive, opts).survival,
                                         ederer1(one, naive, opts).survival, last_time(one)));

    auto uncensored = support::random_registry(rng, 50 + static_cast<int>(500 * u(rng)),
                                               {55, 65, 75}, 1940, 2, hazard, 1e9);
    auto km = kaplan_meier(EventTable::from_records(uncensored));
    auto cp = crude_probability(uncensored, unit, opts);
    for (double t : cp.raw.times) crude = std::max(crude, std::abs(cp.raw.at(t) - (1.0 - km.at(t))));
    for (double t : km.times()) crude = std::max(crude, std::abs(cp.raw.at(t) - (1.0 - km.at(t))));
  }
  Outcome o;
  o.require(unit_pp <= 1e-12, fmt("S_P=1: |PP - exp(-NA)| %.2e", unit_pp));
  o.require(unit_e1 <= 1e-12, fmt("|E1 - exp(-NA)| %.2e", unit_e1));
  o.require(single <= 1e-12, fmt("single stratum |PP - E1| %.2e within follow-up", single));
  o.require(crude <= 1e-12, fmt("Lambda_P=0: |crude - (1 - KM)| %.2e", crude));
  o.detail += "; 50 random registries each";
  return o;
}

// 10 --------------------------------------------------------------------------
std::string render_experiment(const ScenarioConfig& cfg) {
  std::ostringstream out;
  auto r = run_experiment(cfg);
  write_table1(out, r);
  write_table2(out, r);
  return out.str();
}

std::string render_estimates(const ScenarioConfig& cfg) {
  auto cohort = generate_cohort(cfg, cfg.seed);
  auto tables = derive_tables(cohort, cfg);
  auto cases = registered_cases(cohort, cfg, cfg.seed + 1000000);
  auto records = select_window(cases, cfg);
  RegistryOverallSurvival so(build_strata(cases, Banding{}), ExtrapolationConfig{});
  auto keys = record_keys(records);
  AdjustmentConfig acfg;
  auto res = adjust_population_survival(keys, tables.life_table, tables.incidence, so, acfg);
  auto provider = adjusted_survival_provider(res, keys);
  EstimatorOptions opts;
  opts.report_years = cfg.years;
  auto pp = pohar_perme(records, provider, opts);
  std::vector<EstimateRow> rows;
  for (const auto& yv : evaluate_at_years(pp.survival, cfg.years))
    rows.push_back({"pohar_perme", "adjusted", yv.year, yv.value});
  std::ostringstream out;
  write_estimate_csv(out, rows);
  write_curve_csv(out, pp);
  write_adjusted_csv(out, res, keys);
  return out.str();
}

Outcome determinism() {
  ScenarioConfig cfg = experiment(2);
  cfg.cohort_size = 10000;
  cfg.reps = 6;
  cfg.truth_size = 50000;
  cfg.jobs = 1;
  const std::string first = render_experiment(cfg), second = render_experiment(cfg);
  cfg.jobs = std::max(2, g_jobs);
  const std::string parallel = render_experiment(cfg);
  const std::string e1 = render_estimates(cfg), e2 = render_estimates(cfg);
  Outcome o;
  o.require(first == second, fmt("simulation tables identical across runs (%zu bytes)", first.size()));
  o.require(first == parallel, fmt("identical with %d workers", cfg.jobs));
  o.require(e1 == e2, fmt("estimate, curve and adjusted tables identical (%zu bytes)", e1.size()));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only, known;
  app.add_option("--jobs", g_jobs, "replicate workers")->check(CLI::PositiveNumber);
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--known-failure", known, "criteria whose failure does not fail the run");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"table-2 reproduction, dataset 2", table2_high_incidence},
      {"table-2 low incidence, dataset 1", table2_low_incidence},
      {"table-1 counts, dataset 1", table1_counts},
      {"null-adjustment identity", null_adjustment_identity},
      {"solver oracle", solver_oracle},
      {"prevalence and lag oracles", prevalence_oracles},
      {"extrapolation exactness", extrapolation_exactness},
      {"convergence", convergence},
      {"estimator reductions", estimator_reductions},
      {"determinism", determinism},
  };
  const std::set<int> selected(only.begin(), only.end()), expected(known.begin(), known.end());
  bool ok = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool tolerated = !out.pass && expected.count(id);
    std::printf("%s %d %s: %s (%.1fs)%s\n", out.pass ? "PASS" : "FAIL", id,
                criteria[i].first.c_str(), out.detail.c_str(), secs,
                tolerated ? " [known failure]" : "");
    std::fflush(stdout);
    ok = ok && (out.pass || tolerated);
  }
  return ok ? 0 : 1;
}
