#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "netadjust/adjustment.hpp"
#include "netadjust/diagnostics.hpp"
#include "netadjust/incidence.hpp"
#include "netadjust/lifetable.hpp"
#include "netadjust/registry.hpp"

namespace netadjust::sim {

enum class PersonYears { kMidYear, kExact };

// Which registered cases feed the overall-survival curves used by the
// adjustment: every diagnosis in the cohort or only the analysis window.
enum class SurvivalSource { kAllAges, kWindow };

struct ScenarioConfig {
  int dataset = 1;
  int cohort_size = 50000;
  int birth_year = 1960;
  double window_min = 60.0;  // diagnosis ages [window_min, window_max)
  double window_max = 75.0;
  double censor_max = 15.0;  // C ~ U[0, censor_max]
  int reps = 200;
  std::uint64_t seed = 20240101;
  int horizon = 15;
  int extrapolation_points = 4;
  std::vector<double> years{3, 5, 7, 10};
  PersonYears person_years = PersonYears::kMidYear;
  SurvivalSource survival_source = SurvivalSource::kAllAges;
  WithinYearApprox within_year = WithinYearApprox::kMidYear;
  bool normalize_prevalence = true;
  int max_table_age = 120;  // derived tables stop here even if someone is alive
  int truth_size = 500000;
  int jobs = 1;
};

void validate(const ScenarioConfig& cfg);

struct SubjectHistory {
  int gender = 0;
  double t_d = 0.0;  // potential age at diagnosis
  double t_p = 0.0;  // potential age at other-cause death
  double t_de = 0.0; // time from diagnosis to cancer death; 0 when never diagnosed
  double t_do = 0.0; // min(t_de, t_p - t_d) for diagnosed subjects

  bool diagnosed() const { return t_d < t_p; }
  double death_age() const { return diagnosed() ? t_d + t_do : t_p; }
};

// λ exp(βᵀz) with z = (age, year - birth year, gender) and λ normalised so that
// the hazard is 0.1 at age 60, calendar year 2000, gender 0.
double excess_hazard(double age, double year, int gender);

std::vector<SubjectHistory> generate_cohort(const ScenarioConfig& cfg, std::uint64_t seed);

// Closed-form survival of the other-cause death age for the dataset.
double other_cause_survival(int dataset, double age);

struct DerivedTables {
  LifeTable life_table;
  IncidenceTable incidence;
  int max_age = 0;  // last populated age
};

DerivedTables derive_tables(std::span<const SubjectHistory> cohort, const ScenarioConfig& cfg,
                            Diagnostics* diag = nullptr);

// Every diagnosed subject, censored by C ~ U[0, censor_max] drawn in cohort
// order from `censor_seed`.
std::vector<PatientRecord> registered_cases(std::span<const SubjectHistory> cohort,
                                            const ScenarioConfig& cfg, std::uint64_t censor_seed);

// Cases whose integer diagnosis age lies in the analysis window.
std::vector<PatientRecord> select_window(std::span<const PatientRecord> cases,
                                         const ScenarioConfig& cfg);

// registered_cases restricted to the analysis window.
std::vector<PatientRecord> make_registry(std::span<const SubjectHistory> cohort,
                                         const ScenarioConfig& cfg, std::uint64_t censor_seed);

// Every diagnosed subject at any age, uncensored.
std::vector<PatientRecord> full_registry(std::span<const SubjectHistory> cohort,
                                         const ScenarioConfig& cfg);

// Mean of exp(-λ_E t) over the diagnosed-in-window members of a fresh cohort of
// cfg.truth_size subjects. Cached per (dataset, size, seed).
std::vector<double> true_net_survival(const ScenarioConfig& cfg, std::span<const double> years);

// P(T_P > a + t | T_P > a) for a subject diagnosed at integer age a.
double true_population_survival(int dataset, int age, double t);

struct ReplicateResult {
  bool ok = false;
  std::string error;
  int patients = 0;
  int events = 0;
  std::vector<double> naive;     // PP with the life-table diagonal, at cfg.years
  std::vector<double> adjusted;  // PP with the adjusted population survival
  Diagnostics diagnostics;
};

ReplicateResult run_replicate(const ScenarioConfig& cfg, int replicate);

struct MethodSummary {
  std::string method;
  double year = 0.0;
  double truth = 0.0;
  double mean = 0.0;
  double pct_bias = 0.0;
  double rmse = 0.0;
};

struct CountSummary {
  double median = 0.0;
  int min = 0;
  int max = 0;
};

struct ExperimentResult {
  int dataset = 0;
  int reps = 0;
  int excluded = 0;
  CountSummary patients;
  CountSummary events;
  std::vector<MethodSummary> rows;
  Diagnostics diagnostics;
  std::vector<ReplicateResult> replicates;
};

ExperimentResult run_experiment(const ScenarioConfig& cfg);

// `dataset,reps,excluded,patients_median,patients_min,patients_max,events_median,events_min,events_max`
void write_table1(std::ostream& out, const ExperimentResult& result);
// `dataset,year,true,method,mean,pct_bias,rmse_x100`
void write_table2(std::ostream& out, const ExperimentResult& result);

// key = value lines; '#' starts a comment. Unknown keys are an error.
ScenarioConfig read_scenario(std::istream& in, ScenarioConfig base = {});
ScenarioConfig load_scenario(const std::string& path, ScenarioConfig base = {});

}  // namespace netadjust::sim
