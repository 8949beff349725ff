#include "netadjust/netadjust.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "netadjust/adjustment.hpp"
#include "netadjust/error.hpp"
#include "netadjust/estimators.hpp"
#include "netadjust/extrapolation.hpp"
#include "netadjust/incidence.hpp"
#include "netadjust/lifetable.hpp"
#include "netadjust/population.hpp"
#include "netadjust/registry.hpp"
#include "netadjust/simulation.hpp"

namespace na = netadjust;

struct na_registry {
  std::vector<na::PatientRecord> records;
};

struct na_lifetable {
  na::LifeTable table;
};

struct na_incidence {
  na::IncidenceTable table;
};

struct na_adjustment {
  std::vector<na::StratumKey> keys;
  na::AdjustmentResult result;
};

struct na_provider {
  std::unique_ptr<na::PopulationSurvivalProvider> impl;
};

namespace {

thread_local std::string last_error;

na_status fail(na_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Runs `body`, mapping exceptions onto status codes and the thread's message.
template <class Fn>
na_status guarded(Fn&& body) {
  try {
    body();
    last_error.clear();
    return NA_OK;
  } catch (const na::Error& e) {
    return fail(static_cast<na_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(NA_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NA_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw na::Error(na::ErrorCode::kInvalidArgument, what);
}

void add(na_diagnostics* out, const na::Diagnostics& d) {
  if (out == nullptr) return;
  out->lifetable_clamps += d.lifetable_clamps;
  out->incidence_clamps += d.incidence_clamps;
  out->stratum_clamps += d.stratum_clamps;
  out->stratum_merges += d.stratum_merges;
  out->missing_incidence_cells += d.missing_incidence_cells;
  out->incidence_clips += d.incidence_clips;
  out->extrapolation_fallbacks += d.extrapolation_fallbacks;
  out->negative_slope_clips += d.negative_slope_clips;
  out->interpolation_zero_endpoints += d.interpolation_zero_endpoints;
  out->sp_clips += d.sp_clips;
  out->monotonicity_guards += d.monotonicity_guards;
  out->sp_below_lifetable += d.sp_below_lifetable;
  out->weight_caps += d.weight_caps;
  out->empty_risk_sets += d.empty_risk_sets;
  out->excluded_replicates += d.excluded_replicates;
}

na::Diagnostics to_core(const na_diagnostics& c) {
  na::Diagnostics d;
  d.lifetable_clamps = c.lifetable_clamps;
  d.incidence_clamps = c.incidence_clamps;
  d.stratum_clamps = c.stratum_clamps;
  d.stratum_merges = c.stratum_merges;
  d.missing_incidence_cells = c.missing_incidence_cells;
  d.incidence_clips = c.incidence_clips;
  d.extrapolation_fallbacks = c.extrapolation_fallbacks;
  d.negative_slope_clips = c.negative_slope_clips;
  d.interpolation_zero_endpoints = c.interpolation_zero_endpoints;
  d.sp_clips = c.sp_clips;
  d.monotonicity_guards = c.monotonicity_guards;
  d.sp_below_lifetable = c.sp_below_lifetable;
  d.weight_caps = c.weight_caps;
  d.empty_risk_sets = c.empty_risk_sets;
  d.excluded_replicates = c.excluded_replicates;
  return d;
}

std::vector<na::LexisGrid::Cell> cells_from_arrays(size_t n, const int* age, const int* year,
                                                   const int* sex, const double* value) {
  require(n == 0 || (age && year && sex && value), "null array");
  std::vector<na::LexisGrid::Cell> cells(n);
  for (size_t i = 0; i < n; ++i) cells[i] = {{age[i], year[i], {sex[i]}}, value[i]};
  return cells;
}

std::ofstream open_output(const char* path) {
  require(path != nullptr, "null output path");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw na::Error(na::ErrorCode::kIo, std::string("cannot write ") + path);
  return out;
}

void close_output(std::ofstream& out, const char* path) {
  out.flush();
  if (!out) throw na::Error(na::ErrorCode::kIo, std::string("write failed: ") + path);
}

std::vector<double> year_list(const double* years, size_t n) {
  require(n == 0 || years != nullptr, "null years");
  return {years, years + n};
}

na::sim::ScenarioConfig to_scenario(const na_simulation_config& c) {
  na::sim::ScenarioConfig s;
  s.dataset = c.dataset;
  s.cohort_size = c.cohort_size;
  s.reps = c.reps;
  s.seed = c.seed;
  s.horizon = c.horizon;
  s.extrapolation_points = c.extrapolation_points;
  s.jobs = c.jobs;
  s.truth_size = c.truth_size;
  s.max_table_age = c.max_table_age;
  s.person_years = c.person_years_exact ? na::sim::PersonYears::kExact : na::sim::PersonYears::kMidYear;
  s.survival_source =
      c.survival_window_only ? na::sim::SurvivalSource::kWindow : na::sim::SurvivalSource::kAllAges;
  s.within_year = c.within_year_mid ? na::WithinYearApprox::kMidYear : na::WithinYearApprox::kYearStart;
  s.normalize_prevalence = c.normalize_prevalence != 0;
  require(c.n_years <= sizeof c.years / sizeof c.years[0], "too many report years");
  s.years.assign(c.years, c.years + c.n_years);
  return s;
}

void from_scenario(const na::sim::ScenarioConfig& s, na_simulation_config* c) {
  require(s.years.size() <= sizeof c->years / sizeof c->years[0], "too many report years");
  c->dataset = s.dataset;
  c->cohort_size = s.cohort_size;
  c->reps = s.reps;
  c->seed = s.seed;
  c->horizon = s.horizon;
  c->extrapolation_points = s.extrapolation_points;
  c->jobs = s.jobs;
  c->truth_size = s.truth_size;
  c->max_table_age = s.max_table_age;
  c->person_years_exact = s.person_years == na::sim::PersonYears::kExact;
  c->survival_window_only = s.survival_source == na::sim::SurvivalSource::kWindow;
  c->within_year_mid = s.within_year == na::WithinYearApprox::kMidYear;
  c->normalize_prevalence = s.normalize_prevalence;
  c->n_years = s.years.size();
  std::copy(s.years.begin(), s.years.end(), c->years);
}

}  // namespace

extern "C" {

const char* na_diagnostics_name(size_t index) {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, value] : na::Diagnostics{}.items()) out.push_back(name);
    return out;
  }();
  return index < names.size() ? names[index].c_str() : nullptr;
}

uint64_t na_diagnostics_value(const na_diagnostics* diag, size_t index) {
  if (diag == nullptr) return 0;
  auto items = to_core(*diag).items();
  return index < items.size() ? items[index].second : 0;
}

const char* na_version(void) { return "1.0.0"; }

const char* na_status_name(na_status status) {
  return na::error_code_name(static_cast<na::ErrorCode>(status));
}

const char* na_last_error(void) { return last_error.c_str(); }

na_status na_sha256_file(const char* path, char out[65]) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw na::Error(na::ErrorCode::kIo, std::string("cannot open ") + path);
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
      throw na::Error(na::ErrorCode::kInternal, "sha256 init failed");
    }
    std::vector<char> buf(1 << 16);
    while (in) {
      in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
      if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    for (unsigned int i = 0; i < len; ++i) std::snprintf(out + 2 * i, 3, "%02x", digest[i]);
    out[2 * len] = '\0';
  });
}

na_status na_registry_load(const char* path, na_registry** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    auto reg = std::make_unique<na_registry>();
    reg->records = na::load_registry(path);
    *out = reg.release();
  });
}

na_status na_registry_from_arrays(size_t n, const int* age, const int* year, const int* sex,
                                  const double* time, const int* event, na_registry** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    require(n == 0 || (age && year && sex && time && event), "null array");
    auto reg = std::make_unique<na_registry>();
    reg->records.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      if (!(time[i] >= 0.0)) throw na::Error(na::ErrorCode::kOutOfRange, "negative follow-up time");
      reg->records.push_back({age[i], year[i], {sex[i]}, time[i], event[i] != 0});
    }
    *out = reg.release();
  });
}

size_t na_registry_size(const na_registry* registry) {
  return registry ? registry->records.size() : 0;
}

int na_registry_follow_up(const na_registry* registry) {
  return registry ? na::follow_up_horizon(registry->records) : 0;
}

void na_registry_free(na_registry* registry) { delete registry; }

na_status na_lifetable_load(const char* path, na_lifetable** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new na_lifetable{na::load_life_table(path)};
  });
}

na_status na_lifetable_from_arrays(size_t n, const int* age, const int* year, const int* sex,
                                   const double* q, na_lifetable** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = new na_lifetable{na::LifeTable::from_cells(cells_from_arrays(n, age, year, sex, q))};
  });
}

void na_lifetable_free(na_lifetable* table) { delete table; }

na_status na_incidence_load(const char* path, na_incidence** out, na_diagnostics* diag) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    na::Diagnostics d;
    auto table = na::load_incidence(path, &d);
    add(diag, d);
    *out = new na_incidence{std::move(table)};
  });
}

na_status na_incidence_from_counts(const char* diagnoses_path, const char* person_years_path,
                                   na_incidence** out, na_diagnostics* diag) {
  return guarded([&] {
    require(diagnoses_path && person_years_path && out, "null argument");
    na::Diagnostics d;
    auto table = na::compute_incidence(na::load_counts(diagnoses_path, "count"),
                                       na::load_counts(person_years_path, "person_years"), &d);
    add(diag, d);
    *out = new na_incidence{std::move(table)};
  });
}

na_status na_incidence_from_arrays(size_t n, const int* age, const int* year, const int* sex,
                                   const double* ir, na_incidence** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = new na_incidence{na::IncidenceTable::from_cells(cells_from_arrays(n, age, year, sex, ir))};
  });
}

void na_incidence_free(na_incidence* table) { delete table; }

void na_adjust_options_default(na_adjust_options* options) {
  if (options == nullptr) return;
  const na::AdjustmentConfig cfg;
  options->horizon = cfg.horizon;
  options->extrapolation_points = cfg.extrapolation.points;
  options->min_at_risk = cfg.extrapolation.min_at_risk;
  options->min_stratum_size = na::Banding{}.min_stratum_size;
  options->within_year_mid = cfg.within_year == na::WithinYearApprox::kMidYear;
  options->prevalent_unconditional = cfg.prevalent_mode == na::PrevalentSurvivalMode::kUnconditional;
  options->normalize_prevalence = cfg.normalize_prevalence;
}

na_status na_adjust(const na_registry* registry, const na_lifetable* lifetable,
                    const na_incidence* incidence, const na_adjust_options* options,
                    na_adjustment** out, na_diagnostics* diag) {
  return guarded([&] {
    require(registry && lifetable && incidence && out, "null argument");
    na_adjust_options opt;
    na_adjust_options_default(&opt);
    if (options != nullptr) opt = *options;
    require(opt.extrapolation_points >= 2, "extrapolation points must be >= 2");
    require(opt.min_at_risk >= 1, "min_at_risk must be >= 1");
    require(opt.min_stratum_size >= 1, "min_stratum_size must be >= 1");

    na::AdjustmentConfig cfg;
    cfg.horizon = opt.horizon;
    cfg.extrapolation.points = opt.extrapolation_points;
    cfg.extrapolation.min_at_risk = opt.min_at_risk;
    cfg.within_year = opt.within_year_mid ? na::WithinYearApprox::kMidYear
                                          : na::WithinYearApprox::kYearStart;
    cfg.prevalent_mode = opt.prevalent_unconditional ? na::PrevalentSurvivalMode::kUnconditional
                                                     : na::PrevalentSurvivalMode::kConditional;
    cfg.normalize_prevalence = opt.normalize_prevalence != 0;
    na::Banding banding;
    banding.min_stratum_size = opt.min_stratum_size;

    na::Diagnostics d;
    auto adj = std::make_unique<na_adjustment>();
    adj->keys = na::record_keys(registry->records);
    na::RegistryOverallSurvival overall(na::build_strata(registry->records, banding, &d),
                                        cfg.extrapolation, &d);
    adj->result = na::adjust_population_survival(adj->keys, lifetable->table, incidence->table,
                                                 overall, cfg, &d);
    add(diag, d);
    *out = adj.release();
  });
}

na_status na_adjustment_survival(const na_adjustment* adjustment, int age, int year, int sex,
                                 double t, double* out) {
  return guarded([&] {
    require(adjustment && out, "null argument");
    require(t >= 0.0, "t must be >= 0");
    *out = adjustment->result.survival({age, year, {sex}}).at(t);
  });
}

na_status na_adjustment_alpha(const na_adjustment* adjustment, int age, int year, int sex,
                              double* out) {
  return guarded([&] {
    require(adjustment && out, "null argument");
    *out = adjustment->result.lattice.cell({age, year, {sex}}).alpha;
  });
}

na_status na_adjustment_write_csv(const na_adjustment* adjustment, const char* path) {
  return guarded([&] {
    require(adjustment != nullptr, "null adjustment");
    auto out = open_output(path);
    na::write_adjusted_csv(out, adjustment->result, adjustment->keys);
    close_output(out, path);
  });
}

void na_adjustment_free(na_adjustment* adjustment) { delete adjustment; }

na_status na_provider_naive(const na_lifetable* lifetable, const na_registry* registry,
                            int horizon, na_provider** out, na_diagnostics* diag) {
  return guarded([&] {
    require(lifetable && registry && out, "null argument");
    require(horizon >= 0, "horizon must be >= 0");
    na::Diagnostics d;
    const int span = std::max({1, horizon, na::follow_up_horizon(registry->records)});
    auto impl = std::make_unique<na::GridPopulationSurvival>(na::make_naive_provider(
        lifetable->table, na::record_keys(registry->records), span, &d));
    add(diag, d);
    *out = new na_provider{std::move(impl)};
  });
}

na_status na_provider_adjusted(const na_adjustment* adjustment, na_provider** out) {
  return guarded([&] {
    require(adjustment && out, "null argument");
    auto impl = std::make_unique<na::GridPopulationSurvival>(
        na::adjusted_survival_provider(adjustment->result, adjustment->keys));
    *out = new na_provider{std::move(impl)};
  });
}

na_status na_provider_unit(na_provider** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = new na_provider{std::make_unique<na::UnitPopulationSurvival>()};
  });
}

const char* na_provider_name(const na_provider* provider) {
  return provider ? na::provider_mode_name(provider->impl->mode()) : "";
}

void na_provider_free(na_provider* provider) { delete provider; }

na_status na_estimate(const na_registry* registry, const na_provider* provider,
                      na_estimator estimator, const double* years, size_t n_years, double* values,
                      na_diagnostics* diag) {
  return guarded([&] {
    require(registry && provider, "null argument");
    require(n_years == 0 || values != nullptr, "null output");
    na::EstimatorOptions opts;
    opts.report_years = year_list(years, n_years);
    na::Diagnostics d;
    std::optional<na::Curve> curve;
    switch (estimator) {
      case NA_POHAR_PERME:
        curve = na::pohar_perme(registry->records, *provider->impl, opts, &d).survival;
        break;
      case NA_EDERER1:
        curve = na::ederer1(registry->records, *provider->impl, opts, &d).survival;
        break;
      case NA_CRUDE_PROBABILITY:
        curve = na::crude_probability(registry->records, *provider->impl, opts, &d).isotonic;
        break;
      default:
        throw na::Error(na::ErrorCode::kInvalidArgument, "unknown estimator");
    }
    for (size_t i = 0; i < n_years; ++i) values[i] = curve->at(years[i]);
    add(diag, d);
  });
}

na_status na_estimate_write_csv(const na_registry* registry, const na_provider* provider,
                                const double* years, size_t n_years, const char* path,
                                na_diagnostics* diag) {
  return guarded([&] {
    require(registry && provider, "null argument");
    na::EstimatorOptions opts;
    opts.report_years = year_list(years, n_years);
    na::Diagnostics d;
    const auto& records = registry->records;
    const auto& impl = *provider->impl;
    const std::string name = na::provider_mode_name(impl.mode());
    auto pp = na::pohar_perme(records, impl, opts, &d);
    auto e1 = na::ederer1(records, impl, opts, &d);
    auto cpd = na::crude_probability(records, impl, opts, &d);
    std::vector<na::EstimateRow> rows;
    auto append = [&](const char* estimator, const na::Curve& curve) {
      for (const auto& yv : na::evaluate_at_years(curve, opts.report_years)) {
        rows.push_back({estimator, name, yv.year, yv.value});
      }
    };
    append("pohar_perme", pp.survival);
    append("ederer1", e1.survival);
    append("crude_probability", cpd.isotonic);
    append("crude_probability_raw", cpd.raw);
    auto out = open_output(path);
    na::write_estimate_csv(out, rows);
    close_output(out, path);
    add(diag, d);
  });
}

na_status na_curve_write_csv(const na_registry* registry, const na_provider* provider,
                             const char* path, na_diagnostics* diag) {
  return guarded([&] {
    require(registry && provider, "null argument");
    na::Diagnostics d;
    auto pp = na::pohar_perme(registry->records, *provider->impl, {}, &d);
    auto out = open_output(path);
    na::write_curve_csv(out, pp);
    close_output(out, path);
    add(diag, d);
  });
}

void na_simulation_config_default(na_simulation_config* config) {
  if (config == nullptr) return;
  *config = na_simulation_config{};
  from_scenario(na::sim::ScenarioConfig{}, config);
}

na_status na_simulation_config_load(const char* path, na_simulation_config* config) {
  return guarded([&] {
    require(path && config, "null argument");
    from_scenario(na::sim::load_scenario(path, to_scenario(*config)), config);
  });
}

na_status na_simulate(const na_simulation_config* config, const char* table1_path,
                      const char* table2_path, na_simulation_summary* summary,
                      na_diagnostics* diag) {
  return guarded([&] {
    require(config != nullptr, "null config");
    auto result = na::sim::run_experiment(to_scenario(*config));
    if (table1_path != nullptr) {
      auto out = open_output(table1_path);
      na::sim::write_table1(out, result);
      close_output(out, table1_path);
    }
    if (table2_path != nullptr) {
      auto out = open_output(table2_path);
      na::sim::write_table2(out, result);
      close_output(out, table2_path);
    }
    if (summary != nullptr) {
      summary->reps = result.reps;
      summary->excluded = result.excluded;
      summary->patients_median = result.patients.median;
      summary->events_median = result.events.median;
    }
    add(diag, result.diagnostics);
  });
}

}  // extern "C"
