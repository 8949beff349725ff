// netadjust: relative-survival estimation with population-survival adjustment.
//
//   netadjust estimate --registry R --lifetable L [--mode adjusted --incidence I] --out DIR
//   netadjust adjust   --registry R --lifetable L --incidence I --out DIR
//   netadjust simulate [--scenario FILE] [--dataset N --reps N ...] --out DIR
//
// Exit status: 0 success, 1 hard error, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "netadjust/netadjust.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ApiError : std::runtime_error {
  na_status status;
  ApiError(na_status s, const std::string& what) : std::runtime_error(what), status(s) {}
};

void check(na_status status) {
  if (status != NA_OK) {
    throw ApiError(status, std::string(na_status_name(status)) + ": " + na_last_error());
  }
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Registry = std::unique_ptr<na_registry, Deleter<na_registry, na_registry_free>>;
using Lifetable = std::unique_ptr<na_lifetable, Deleter<na_lifetable, na_lifetable_free>>;
using Incidence = std::unique_ptr<na_incidence, Deleter<na_incidence, na_incidence_free>>;
using Adjustment = std::unique_ptr<na_adjustment, Deleter<na_adjustment, na_adjustment_free>>;
using Provider = std::unique_ptr<na_provider, Deleter<na_provider, na_provider_free>>;

struct Options {
  std::string registry, lifetable, incidence, population, mode = "naive", scenario, out;
  int horizon = 15;
  int extrapolation_points = 4;
  std::vector<double> years{3, 5, 7, 10};
  int reps = 0, dataset = 0, jobs = 1;
  unsigned long long seed = 0;
};

struct Run {
  std::string command;
  json config = json::object();
  json inputs = json::object();
  json outputs = json::array();
  na_diagnostics diag{};
};

std::string hash_file(const std::string& path) {
  char hex[65];
  check(na_sha256_file(path.c_str(), hex));
  return hex;
}

void record_input(Run& run, const std::string& role, const std::string& path) {
  if (path.empty()) return;
  run.inputs[role] = {{"path", path}, {"sha256", hash_file(path)}};
}

std::string output_path(Run& run, const std::string& dir, const std::string& name) {
  run.outputs.push_back(name);
  return (fs::path(dir) / name).string();
}

json diagnostics_json(const na_diagnostics& diag) {
  json out = json::object();
  for (size_t i = 0; const char* name = na_diagnostics_name(i); ++i) {
    out[name] = na_diagnostics_value(&diag, i);
  }
  return out;
}

void write_manifest(const Run& run, const std::string& dir, const std::string& error) {
  json m;
  m["tool"] = "netadjust";
  m["version"] = na_version();
  m["command"] = run.command;
  m["config"] = run.config;
  m["inputs"] = run.inputs;
  m["outputs"] = run.outputs;
  m["diagnostics"] = diagnostics_json(run.diag);
  m["status"] = error.empty() ? "ok" : "error";
  if (!error.empty()) m["error"] = error;
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  out << m.dump(2) << '\n';
}

void require_file(const std::string& flag, const std::string& path) {
  if (path.empty()) throw UsageError(flag + " is required");
  if (!fs::is_regular_file(path)) throw UsageError(flag + ": no such file: " + path);
}

void check_common(const Options& o) {
  if (o.extrapolation_points < 2) throw UsageError("--extrapolation-points must be >= 2");
  if (o.horizon < 1) throw UsageError("--horizon must be >= 1");
  for (double y : o.years) {
    if (!(y >= 0.0)) throw UsageError("--years must be non-negative");
  }
}

Incidence load_incidence(const Options& o, Run& run) {
  na_incidence* raw = nullptr;
  if (o.population.empty()) {
    check(na_incidence_load(o.incidence.c_str(), &raw, &run.diag));
  } else {
    check(na_incidence_from_counts(o.incidence.c_str(), o.population.c_str(), &raw, &run.diag));
  }
  return Incidence(raw);
}

Adjustment run_adjustment(const Options& o, Run& run, const na_registry* reg,
                          const na_lifetable* table) {
  auto incidence = load_incidence(o, run);
  na_adjust_options opt;
  na_adjust_options_default(&opt);
  opt.horizon = o.horizon;
  opt.extrapolation_points = o.extrapolation_points;
  na_adjustment* raw = nullptr;
  check(na_adjust(reg, table, incidence.get(), &opt, &raw, &run.diag));
  return Adjustment(raw);
}

void echo_tables(const Options& o, Run& run) {
  run.config["horizon"] = o.horizon;
  run.config["extrapolation_points"] = o.extrapolation_points;
  record_input(run, "registry", o.registry);
  record_input(run, "lifetable", o.lifetable);
  record_input(run, o.population.empty() ? "incidence" : "diagnoses", o.incidence);
  record_input(run, "population", o.population);
}

Registry load_registry(const Options& o) {
  na_registry* raw = nullptr;
  check(na_registry_load(o.registry.c_str(), &raw));
  return Registry(raw);
}

Lifetable load_lifetable(const Options& o) {
  na_lifetable* raw = nullptr;
  check(na_lifetable_load(o.lifetable.c_str(), &raw));
  return Lifetable(raw);
}

void cmd_estimate(const Options& o, Run& run) {
  check_common(o);
  require_file("--registry", o.registry);
  require_file("--lifetable", o.lifetable);
  const bool adjusted = o.mode == "adjusted";
  if (adjusted) {
    if (o.incidence.empty()) throw UsageError("--mode adjusted requires --incidence");
    require_file("--incidence", o.incidence);
    const double top = o.years.empty() ? 0.0 : *std::max_element(o.years.begin(), o.years.end());
    if (o.horizon < top) throw UsageError("--horizon must be >= the largest report year");
  }
  if (!o.population.empty()) require_file("--population", o.population);
  run.config["mode"] = o.mode;
  run.config["years"] = o.years;
  echo_tables(o, run);

  auto reg = load_registry(o);
  auto table = load_lifetable(o);
  na_provider* raw = nullptr;
  Adjustment adj;
  if (adjusted) {
    adj = run_adjustment(o, run, reg.get(), table.get());
    check(na_adjustment_write_csv(adj.get(), output_path(run, o.out, "adjusted.csv").c_str()));
    check(na_provider_adjusted(adj.get(), &raw));
  } else {
    check(na_provider_naive(table.get(), reg.get(), o.horizon, &raw, &run.diag));
  }
  Provider provider(raw);
  check(na_estimate_write_csv(reg.get(), provider.get(), o.years.data(), o.years.size(),
                              output_path(run, o.out, "estimates.csv").c_str(), &run.diag));
  check(na_curve_write_csv(reg.get(), provider.get(), output_path(run, o.out, "curve.csv").c_str(),
                           &run.diag));
}

void cmd_adjust(const Options& o, Run& run) {
  check_common(o);
  require_file("--registry", o.registry);
  require_file("--lifetable", o.lifetable);
  require_file("--incidence", o.incidence);
  if (!o.population.empty()) require_file("--population", o.population);
  echo_tables(o, run);
  auto reg = load_registry(o);
  auto table = load_lifetable(o);
  auto adj = run_adjustment(o, run, reg.get(), table.get());
  check(na_adjustment_write_csv(adj.get(), output_path(run, o.out, "adjusted.csv").c_str()));
}

void cmd_simulate(const Options& o, const CLI::App& sub, Run& run) {
  na_simulation_config cfg;
  na_simulation_config_default(&cfg);
  if (!o.scenario.empty()) {
    require_file("--scenario", o.scenario);
    record_input(run, "scenario", o.scenario);
    check(na_simulation_config_load(o.scenario.c_str(), &cfg));
  }
  auto given = [&](const char* flag) { return sub.count(flag) > 0; };
  if (given("--dataset")) cfg.dataset = o.dataset;
  if (given("--reps")) cfg.reps = o.reps;
  if (given("--seed")) cfg.seed = o.seed;
  if (given("--jobs")) cfg.jobs = o.jobs;
  if (given("--horizon")) cfg.horizon = o.horizon;
  if (given("--extrapolation-points")) cfg.extrapolation_points = o.extrapolation_points;
  if (given("--years")) {
    if (o.years.size() > sizeof cfg.years / sizeof cfg.years[0]) throw UsageError("too many --years");
    cfg.n_years = o.years.size();
    std::copy(o.years.begin(), o.years.end(), cfg.years);
  }
  if (cfg.extrapolation_points < 2) throw UsageError("--extrapolation-points must be >= 2");
  if (cfg.reps < 1) throw UsageError("--reps must be >= 1");
  if (cfg.jobs < 1) throw UsageError("--jobs must be >= 1");

  run.config = {{"dataset", cfg.dataset},
                {"cohort_size", cfg.cohort_size},
                {"reps", cfg.reps},
                {"seed", cfg.seed},
                {"horizon", cfg.horizon},
                {"extrapolation_points", cfg.extrapolation_points},
                {"truth_size", cfg.truth_size},
                {"max_table_age", cfg.max_table_age},
                {"person_years", cfg.person_years_exact ? "exact" : "mid"},
                {"survival_source", cfg.survival_window_only ? "window" : "all"},
                {"within_year", cfg.within_year_mid ? "mid" : "start"},
                {"normalize_prevalence", cfg.normalize_prevalence != 0},
                {"years", std::vector<double>(cfg.years, cfg.years + cfg.n_years)}};
  // Worker count does not affect results, so it stays out of the manifest.
  na_simulation_summary summary{};
  check(na_simulate(&cfg, output_path(run, o.out, "table1.csv").c_str(),
                    output_path(run, o.out, "table2.csv").c_str(), &summary, &run.diag));
  std::fprintf(stderr, "dataset %d: %d replicates, %d excluded, median patients %.1f, events %.1f\n",
               cfg.dataset, summary.reps, summary.excluded, summary.patients_median,
               summary.events_median);
  if (summary.excluded > 0) throw ApiError(NA_ERR_INTERNAL, "replicates were excluded");
}

void add_table_flags(CLI::App* sub, Options& o) {
  sub->add_option("--registry", o.registry, "Registry CSV (age_diag,year_diag,sex,time,event)");
  sub->add_option("--lifetable", o.lifetable, "Life table CSV (age,year,sex,q)");
  sub->add_option("--incidence", o.incidence,
                  "Incidence CSV (age,year,sex,ir), or diagnosis counts (age,year,sex,count) "
                  "when --population is given");
  sub->add_option("--population", o.population, "Person-years CSV (age,year,sex,person_years)");
}

void add_model_flags(CLI::App* sub, Options& o) {
  sub->add_option("--horizon", o.horizon, "Adjustment horizon K in years")->capture_default_str();
  sub->add_option("--extrapolation-points", o.extrapolation_points,
                  "Anchor points H for the survival tail")
      ->capture_default_str();
  sub->add_option("--years", o.years, "Report years")->delimiter(',')->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relative-survival estimation with population-survival adjustment", "netadjust"};
  app.require_subcommand(1);
  Options o;

  auto* estimate = app.add_subcommand("estimate", "Pohar-Perme, Ederer I and crude probability");
  add_table_flags(estimate, o);
  add_model_flags(estimate, o);
  estimate->add_option("--mode", o.mode, "Population survival source")
      ->check(CLI::IsMember({"naive", "adjusted"}))
      ->capture_default_str();

  auto* adjust = app.add_subcommand("adjust", "Export the adjusted population survival");
  add_table_flags(adjust, o);
  add_model_flags(adjust, o);

  auto* simulate = app.add_subcommand("simulate", "Run the simulation experiment");
  simulate->add_option("--scenario", o.scenario, "Scenario file (key = value lines)");
  simulate->add_option("--dataset", o.dataset, "Dataset 1-4");
  simulate->add_option("--reps", o.reps, "Replicates");
  simulate->add_option("--seed", o.seed, "Base seed");
  simulate->add_option("--jobs", o.jobs, "Worker threads");
  add_model_flags(simulate, o);

  for (auto* sub : {estimate, adjust, simulate}) {
    sub->add_option("--out", o.out, "Output directory")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  Run run;
  CLI::App* sub = app.get_subcommands().front();
  run.command = sub->get_name();
  try {
    fs::create_directories(o.out);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: cannot create output directory: " << e.what() << '\n';
    return kExitError;
  }

  std::string error;
  int status = 0;
  try {
    if (sub == estimate) cmd_estimate(o, run);
    else if (sub == adjust) cmd_adjust(o, run);
    else cmd_simulate(o, *sub, run);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    error = e.what();
    status = kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    error = e.what();
    status = kExitError;
  }
  write_manifest(run, o.out, error);
  return status;
}
