#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "netadjust/diagnostics.hpp"
#include "netadjust/lifetable.hpp"
#include "netadjust/registry.hpp"

namespace netadjust {

enum class ProviderMode { kNaive, kAdjusted, kUnit };

const char* provider_mode_name(ProviderMode mode);

// S_P(t | Z_D) and Λ_P(t | Z_D) for the population-survival term of the
// relative-survival estimators.
class PopulationSurvivalProvider {
 public:
  virtual ~PopulationSurvivalProvider() = default;
  virtual ProviderMode mode() const = 0;
  virtual double survival(const StratumKey& key, double t) const = 0;
  virtual double cumulative_hazard(const StratumKey& key, double t) const = 0;
};

// S_P ≡ 1.
class UnitPopulationSurvival final : public PopulationSurvivalProvider {
 public:
  ProviderMode mode() const override { return ProviderMode::kUnit; }
  double survival(const StratumKey&, double) const override { return 1.0; }
  double cumulative_hazard(const StratumKey&, double) const override { return 0.0; }
};

// Annual grid per key, log-linear between grid points (constant hazard within
// each year) and a constant-hazard continuation past the last point.
class GridPopulationSurvival final : public PopulationSurvivalProvider {
 public:
  GridPopulationSurvival(ProviderMode mode, std::map<StratumKey, std::vector<double>> grids);

  ProviderMode mode() const override { return mode_; }
  double survival(const StratumKey& key, double t) const override;
  double cumulative_hazard(const StratumKey& key, double t) const override;

  const std::vector<double>& grid(const StratumKey& key) const;
  const std::map<StratumKey, std::vector<double>>& grids() const { return grids_; }

 private:
  ProviderMode mode_;
  std::map<StratumKey, std::vector<double>> grids_;
};

// Standard practice: the life-table diagonal S̃_{L→O} used directly.
GridPopulationSurvival make_naive_provider(const LifeTable& table, std::span<const StratumKey> keys,
                                           int horizon, Diagnostics* diag = nullptr);

// Distinct (age, year, demographics) keys of the records, sorted.
std::vector<StratumKey> record_keys(std::span<const PatientRecord> records);

// Smallest integer horizon covering every observed time.
int follow_up_horizon(std::span<const PatientRecord> records);

}  // namespace netadjust
