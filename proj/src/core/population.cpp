#include "netadjust/population.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "netadjust/error.hpp"
#include "netadjust/extrapolation.hpp"

namespace netadjust {

const char* provider_mode_name(ProviderMode mode) {
  switch (mode) {
    case ProviderMode::kNaive: return "naive";
    case ProviderMode::kAdjusted: return "adjusted";
    case ProviderMode::kUnit: return "unit";
  }
  return "unknown";
}

GridPopulationSurvival::GridPopulationSurvival(ProviderMode mode,
                                               std::map<StratumKey, std::vector<double>> grids)
    : mode_(mode), grids_(std::move(grids)) {
  for (const auto& [key, grid] : grids_) {
    if (grid.empty() || grid.front() != 1.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "population grid must start at S(0) = 1 for " + to_string(key));
    }
  }
}

const std::vector<double>& GridPopulationSurvival::grid(const StratumKey& key) const {
  auto it = grids_.find(key);
  if (it == grids_.end()) {
    throw Error(ErrorCode::kInternal, "no population survival prepared for " + to_string(key));
  }
  return it->second;
}

double GridPopulationSurvival::survival(const StratumKey& key, double t) const {
  if (t <= 0.0) return 1.0;
  return loglinear_at(grid(key), t);
}

double GridPopulationSurvival::cumulative_hazard(const StratumKey& key, double t) const {
  if (t <= 0.0) return 0.0;
  return -std::log(survival(key, t));
}

GridPopulationSurvival make_naive_provider(const LifeTable& table, std::span<const StratumKey> keys,
                                           int horizon, Diagnostics* diag) {
  std::map<StratumKey, std::vector<double>> grids;
  for (const auto& key : keys) {
    if (grids.count(key) != 0) continue;
    grids.emplace(key, diagonal_survival(table, key, horizon, diag).values());
  }
  return GridPopulationSurvival(ProviderMode::kNaive, std::move(grids));
}

std::vector<StratumKey> record_keys(std::span<const PatientRecord> records) {
  std::set<StratumKey> keys;
  for (const auto& r : records) keys.insert(r.key());
  return {keys.begin(), keys.end()};
}

int follow_up_horizon(std::span<const PatientRecord> records) {
  double top = 0.0;
  for (const auto& r : records) top = std::max(top, r.time);
  return std::max(1, static_cast<int>(std::ceil(top)));
}

}  // namespace netadjust
