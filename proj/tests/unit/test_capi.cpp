#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "netadjust/netadjust.h"
#include "support.hpp"

namespace {

std::string temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "netadjust_capi";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Constant-q life table and a fixed incidence over ages 0..100, 1940..2040.
struct Grid {
  std::vector<int> age, year, sex;
  std::vector<double> value;
  Grid(double q) {
    for (int y = 1940; y <= 2040; ++y)
      for (int a = 0; a <= 100; ++a) {
        age.push_back(a);
        year.push_back(y);
        sex.push_back(0);
        value.push_back(q);
      }
  }
};

struct Registry {
  std::vector<int> age, year, sex, event;
  std::vector<double> time;
};

Registry random_registry(unsigned seed, int n) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(60, 64);
  std::exponential_distribution<double> death(0.2);
  std::uniform_real_distribution<double> censor(0.0, 10.0);
  Registry r;
  for (int i = 0; i < n; ++i) {
    int a = pick(rng);
    double t = death(rng), c = censor(rng);
    r.age.push_back(a);
    r.year.push_back(1940 + a);
    r.sex.push_back(0);
    r.time.push_back(std::min(t, c));
    r.event.push_back(t <= c ? 1 : 0);
  }
  return r;
}

}  // namespace

TEST_CASE("c api: status codes and messages") {
  CHECK(std::string(na_status_name(NA_OK)) == "ok");
  CHECK(std::string(na_status_name(NA_ERR_SCHEMA)) == "schema violation");
  CHECK(std::string(na_version()).size() > 0);
  CHECK(std::string(na_diagnostics_name(0)) == "lifetable_clamps");
  CHECK(std::string(na_diagnostics_name(14)) == "excluded_replicates");
  CHECK(na_diagnostics_name(15) == nullptr);

  na_registry* reg = nullptr;
  CHECK(na_registry_load("/nonexistent/registry.csv", &reg) == NA_ERR_IO);
  CHECK(reg == nullptr);
  CHECK(std::string(na_last_error()).find("/nonexistent/registry.csv") != std::string::npos);
  CHECK(na_registry_load(nullptr, &reg) == NA_ERR_INVALID_ARGUMENT);

  const std::string bad = temp_file("bad_registry.csv");
  std::ofstream(bad) << "age_diag,year_diag,sex,time,event\n60,2000,0,1.0,7\n";
  CHECK(na_registry_load(bad.c_str(), &reg) == NA_ERR_SCHEMA);

  REQUIRE(na_registry_load(support::data_path("registry.csv").c_str(), &reg) == NA_OK);
  CHECK(std::string(na_last_error()).empty());
  CHECK(na_registry_size(reg) == 12);
  na_registry_free(reg);
}

TEST_CASE("c api: sha256") {
  const std::string path = temp_file("abc.txt");
  std::ofstream(path, std::ios::binary) << "abc";
  char hex[65] = {0};
  REQUIRE(na_sha256_file(path.c_str(), hex) == NA_OK);
  CHECK(std::string(hex) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(na_sha256_file("/nonexistent", hex) == NA_ERR_IO);
}

TEST_CASE("c api: zero incidence leaves naive and adjusted estimates equal") {
  Grid q(0.01), ir(0.0);
  auto r = random_registry(3, 300);
  na_registry* reg = nullptr;
  na_lifetable* lt = nullptr;
  na_incidence* inc = nullptr;
  REQUIRE(na_registry_from_arrays(r.age.size(), r.age.data(), r.year.data(), r.sex.data(),
                                  r.time.data(), r.event.data(), &reg) == NA_OK);
  REQUIRE(na_lifetable_from_arrays(q.age.size(), q.age.data(), q.year.data(), q.sex.data(),
                                   q.value.data(), &lt) == NA_OK);
  REQUIRE(na_incidence_from_arrays(ir.age.size(), ir.age.data(), ir.year.data(), ir.sex.data(),
                                   ir.value.data(), &inc) == NA_OK);
  CHECK(na_registry_follow_up(reg) <= 10);

  na_adjust_options opts;
  na_adjust_options_default(&opts);
  CHECK(opts.horizon == 15);
  CHECK(opts.extrapolation_points == 4);
  na_adjustment* adj = nullptr;
  na_diagnostics diag{};
  REQUIRE(na_adjust(reg, lt, inc, &opts, &adj, &diag) == NA_OK);

  double s = 0.0, alpha = 1.0;
  REQUIRE(na_adjustment_survival(adj, 60, 2000, 0, 3.0, &s) == NA_OK);
  CHECK(s == doctest::Approx(std::pow(0.99, 3)).epsilon(1e-14));
  REQUIRE(na_adjustment_survival(adj, 60, 2000, 0, 0.5, &s) == NA_OK);
  CHECK(s == doctest::Approx(std::sqrt(0.99)).epsilon(1e-14));
  REQUIRE(na_adjustment_alpha(adj, 62, 2002, 0, &alpha) == NA_OK);
  CHECK(alpha == 0.0);
  CHECK(na_adjustment_survival(adj, 30, 1970, 0, 1.0, &s) == NA_ERR_INTERNAL);

  na_provider *naive = nullptr, *adjusted = nullptr, *unit = nullptr;
  REQUIRE(na_provider_naive(lt, reg, opts.horizon, &naive, &diag) == NA_OK);
  REQUIRE(na_provider_adjusted(adj, &adjusted) == NA_OK);
  REQUIRE(na_provider_unit(&unit) == NA_OK);
  CHECK(std::string(na_provider_name(naive)) == "naive");
  CHECK(std::string(na_provider_name(adjusted)) == "adjusted");
  CHECK(std::string(na_provider_name(unit)) == "unit");

  const double years[] = {1, 3, 5, 7, 10};
  for (auto est : {NA_POHAR_PERME, NA_EDERER1, NA_CRUDE_PROBABILITY}) {
    double a[5], b[5];
    REQUIRE(na_estimate(reg, naive, est, years, 5, a, &diag) == NA_OK);
    REQUIRE(na_estimate(reg, adjusted, est, years, 5, b, &diag) == NA_OK);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }
  double v[1];
  CHECK(na_estimate(reg, naive, static_cast<na_estimator>(9), years, 1, v, nullptr) ==
        NA_ERR_INVALID_ARGUMENT);

  const std::string est_csv = temp_file("estimates.csv"), curve_csv = temp_file("curve.csv"),
                    adj_csv = temp_file("adjusted.csv");
  REQUIRE(na_estimate_write_csv(reg, adjusted, years, 5, est_csv.c_str(), &diag) == NA_OK);
  REQUIRE(na_curve_write_csv(reg, adjusted, curve_csv.c_str(), &diag) == NA_OK);
  REQUIRE(na_adjustment_write_csv(adj, adj_csv.c_str()) == NA_OK);
  const std::string text = slurp(est_csv);
  CHECK(text.rfind("estimator,provider,year,value\n", 0) == 0);
  CHECK(text.find("pohar_perme,adjusted,10,") != std::string::npos);
  CHECK(text.find("crude_probability_raw,adjusted,1,") != std::string::npos);
  CHECK(slurp(curve_csv).rfind("t,lambda,e_s\n", 0) == 0);
  CHECK(slurp(adj_csv).rfind("age,year,sex,t,s_p,lifetable,alpha,r\n", 0) == 0);
  CHECK(na_estimate_write_csv(reg, adjusted, years, 5, "/nonexistent/dir/x.csv", nullptr) == NA_ERR_IO);

  CHECK(diag.sp_clips == 0);
  CHECK(diag.monotonicity_guards == 0);

  na_provider_free(naive);
  na_provider_free(adjusted);
  na_provider_free(unit);
  na_adjustment_free(adj);
  na_incidence_free(inc);
  na_lifetable_free(lt);
  na_registry_free(reg);
}

TEST_CASE("c api: file fixtures") {
  na_registry* reg = nullptr;
  na_lifetable* lt = nullptr;
  na_incidence *inc = nullptr, *counted = nullptr;
  na_diagnostics diag{};
  REQUIRE(na_registry_load(support::data_path("registry.csv").c_str(), &reg) == NA_OK);
  REQUIRE(na_lifetable_load(support::data_path("lifetable.csv").c_str(), &lt) == NA_OK);
  REQUIRE(na_incidence_load(support::data_path("incidence.csv").c_str(), &inc, &diag) == NA_OK);
  REQUIRE(na_incidence_from_counts(support::data_path("diagnoses.csv").c_str(),
                                   support::data_path("person_years.csv").c_str(), &counted,
                                   &diag) == NA_OK);
  na_adjust_options opts;
  na_adjust_options_default(&opts);
  opts.horizon = 10;
  na_adjustment* adj = nullptr;
  REQUIRE(na_adjust(reg, lt, inc, &opts, &adj, &diag) == NA_OK);
  double prev = 1.0;
  for (int t = 0; t <= 10; ++t) {
    double s = 0.0;
    REQUIRE(na_adjustment_survival(adj, 61, 2001, 1, t, &s) == NA_OK);
    CHECK(s <= prev);
    CHECK(s > 0.0);
    prev = s;
  }
  opts.horizon = 0;
  na_adjustment* none = nullptr;
  CHECK(na_adjust(reg, lt, inc, &opts, &none, nullptr) == NA_ERR_INVALID_ARGUMENT);
  CHECK(none == nullptr);

  na_adjustment_free(adj);
  na_incidence_free(counted);
  na_incidence_free(inc);
  na_lifetable_free(lt);
  na_registry_free(reg);
}

TEST_CASE("c api: simulation config") {
  na_simulation_config cfg;
  na_simulation_config_default(&cfg);
  CHECK(cfg.dataset == 1);
  CHECK(cfg.n_years == 4);
  REQUIRE(na_simulation_config_load(support::data_path("scenario_small.txt").c_str(), &cfg) == NA_OK);
  CHECK(cfg.cohort_size == 2000);
  CHECK(cfg.seed == 11);
  CHECK(cfg.n_years == 2);
  CHECK(cfg.horizon == 15);
  CHECK(na_simulation_config_load(support::data_path("scenario_bad.txt").c_str(), &cfg) == NA_ERR_SCHEMA);

  cfg.reps = 1;
  const std::string t1 = temp_file("table1.csv"), t2 = temp_file("table2.csv");
  na_simulation_summary summary{};
  REQUIRE(na_simulate(&cfg, t1.c_str(), t2.c_str(), &summary, nullptr) == NA_OK);
  CHECK(summary.reps == 1);
  CHECK(summary.excluded == 0);
  CHECK(summary.patients_median > 0);
  CHECK(slurp(t2).rfind("dataset,year,true,method,mean,pct_bias,rmse_x100\n", 0) == 0);
}
