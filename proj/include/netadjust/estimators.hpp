#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "netadjust/diagnostics.hpp"
#include "netadjust/population.hpp"
#include "netadjust/registry.hpp"

namespace netadjust {

struct EstimatorOptions {
  double weight_cap = 1e6;          // W; S_P is floored at 1/W
  std::vector<double> report_years;  // added to the evaluation grid
};

// Right-continuous step curve; times[0] = 0.
struct Curve {
  std::vector<double> times;
  std::vector<double> values;

  double at(double t) const;
};

struct NetSurvivalEstimate {
  Curve cumulative_hazard;  // Λ̂
  Curve survival;           // exp(-Λ̂)
};

struct CrudeProbabilityEstimate {
  Curve raw;         // F̂_CPD
  Curve noncancer;   // ∫ Ŝ_O dΛ̄_P, the other-cause share
  Curve isotonic;    // least-squares non-decreasing fit of raw
};

// Net survival with inverse-population-survival weights; the expected-hazard
// integral is exact between evaluation times.
NetSurvivalEstimate pohar_perme(std::span<const PatientRecord> records,
                                const PopulationSurvivalProvider& provider,
                                const EstimatorOptions& options = {}, Diagnostics* diag = nullptr);

// Relative survival: Nelson-Aalen minus the expected-survival-weighted
// population hazard of the whole cohort.
NetSurvivalEstimate ederer1(std::span<const PatientRecord> records,
                            const PopulationSurvivalProvider& provider,
                            const EstimatorOptions& options = {}, Diagnostics* diag = nullptr);

CrudeProbabilityEstimate crude_probability(std::span<const PatientRecord> records,
                                           const PopulationSurvivalProvider& provider,
                                           const EstimatorOptions& options = {},
                                           Diagnostics* diag = nullptr);

// Pool-adjacent-violators, equal weights.
std::vector<double> isotonic_increasing(std::span<const double> values);

struct YearValue {
  double year = 0.0;
  double value = 0.0;
};

std::vector<YearValue> evaluate_at_years(const Curve& curve, std::span<const double> years);

// `estimator,provider,year,value`
struct EstimateRow {
  std::string estimator;
  std::string provider;
  double year = 0.0;
  double value = 0.0;
};
void write_estimate_csv(std::ostream& out, std::span<const EstimateRow> rows);
// `t,lambda,e_s`
void write_curve_csv(std::ostream& out, const NetSurvivalEstimate& estimate);

}  // namespace netadjust
