#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netadjust/diagnostics.hpp"

namespace netadjust {

// Time-invariant categorical covariates (sex, race, ...), compared
// component-wise.
using Demographics = std::vector<int>;

// A cell of the (age, calendar year, demographics) lattice. Shifting moves
// age and year together, i.e. along a birth-cohort diagonal.
struct StratumKey {
  int age = 0;
  int year = 0;
  Demographics demo;

  StratumKey shifted(int years) const { return {age + years, year + years, demo}; }
  int cohort() const { return year - age; }

  auto operator<=>(const StratumKey&) const = default;
  bool operator==(const StratumKey&) const = default;
};

std::string to_string(const StratumKey& key);

struct PatientRecord {
  int age_diag = 0;
  int year_diag = 0;
  Demographics demo;
  double time = 0.0;  // years from diagnosis
  bool event = false;  // death from any cause

  StratumKey key() const { return {age_diag, year_diag, demo}; }
};

struct Banding {
  int age_width = 1;
  int year_width = 1;
  int min_stratum_size = 10;
};

// Distinct observed times with risk-set bookkeeping. At-risk uses the
// Y(u) = I(T >= u) convention; deaths precede censorings at tied times.
class EventTable {
 public:
  EventTable() = default;
  static EventTable from_observations(std::span<const double> times,
                                      std::span<const bool> events);
  static EventTable from_records(std::span<const PatientRecord> records);

  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  std::size_t subjects() const { return subjects_; }

  const std::vector<double>& times() const { return times_; }
  const std::vector<int>& at_risk() const { return at_risk_; }
  const std::vector<int>& deaths() const { return deaths_; }
  const std::vector<int>& censored() const { return censored_; }

 private:
  std::vector<double> times_;
  std::vector<int> at_risk_;
  std::vector<int> deaths_;
  std::vector<int> censored_;
  std::size_t subjects_ = 0;
};

// Right-continuous step function: `initial` on [0, times[0]), values[i] on
// [times[i], times[i+1]).
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(double initial, std::vector<double> times, std::vector<double> values);

  double operator()(double t) const;
  double left_limit(double t) const;
  double initial() const { return initial_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& values() const { return values_; }

 private:
  double initial_ = 0.0;
  std::vector<double> times_;
  std::vector<double> values_;
};

class StepSurvivalCurve {
 public:
  StepSurvivalCurve() : fn_(1.0, {}, {}) {}
  StepSurvivalCurve(std::vector<double> times, std::vector<double> values);

  double at(double t) const { return fn_(t); }
  double left_limit(double t) const { return fn_.left_limit(t); }
  const std::vector<double>& times() const { return fn_.times(); }
  const std::vector<double>& values() const { return fn_.values(); }

 private:
  StepFunction fn_;
};

class CumulativeHazardCurve {
 public:
  CumulativeHazardCurve() : fn_(0.0, {}, {}) {}
  CumulativeHazardCurve(std::vector<double> times, std::vector<double> values);

  double at(double t) const { return fn_(t); }
  const std::vector<double>& times() const { return fn_.times(); }
  const std::vector<double>& values() const { return fn_.values(); }

 private:
  StepFunction fn_;
};

struct Stratum {
  StratumKey key;                   // band representative
  std::vector<StratumKey> members;  // band keys folded into this stratum
  EventTable table;
};

// Partition of a registry into strata, with lookup from any lattice key.
class StrataMap {
 public:
  StrataMap() = default;
  StrataMap(std::vector<Stratum> strata, Banding banding);

  const std::vector<Stratum>& strata() const { return strata_; }
  const Banding& banding() const { return banding_; }
  std::size_t total_subjects() const;

  StratumKey band(const StratumKey& key) const;
  // Exact band match, or nullptr.
  const Stratum* find(const StratumKey& key) const;
  // Band, clamp into the registry's covariate range, then fall back to the
  // nearest stratum (same demographics first). Never null on a non-empty map.
  std::size_t resolve(const StratumKey& key, Diagnostics* diag) const;

 private:
  std::vector<Stratum> strata_;
  Banding banding_;
  std::map<StratumKey, std::size_t> index_;
  int age_lo_ = 0, age_hi_ = 0, year_lo_ = 0, year_hi_ = 0;
};

StrataMap build_strata(std::span<const PatientRecord> records, const Banding& banding,
                       Diagnostics* diag = nullptr);

StepSurvivalCurve kaplan_meier(const EventTable& table);
CumulativeHazardCurve nelson_aalen(const EventTable& table);
double survival_at(const StepSurvivalCurve& curve, double t);

// Registry CSV: age_diag,year_diag,sex,time,event
std::vector<PatientRecord> read_registry_csv(std::istream& in);
std::vector<PatientRecord> load_registry(const std::string& path);
void write_registry_csv(std::ostream& out, std::span<const PatientRecord> records);

}  // namespace netadjust
