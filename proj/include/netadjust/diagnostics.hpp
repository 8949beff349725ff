#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace netadjust {

// Counters for every place the pipeline departs from the raw estimator:
// clamped lookups, clipped values, capped weights, fallbacks. A run always
// reports them; near-zero guard counts are themselves a diagnostic.
struct Diagnostics {
  std::uint64_t lifetable_clamps = 0;
  std::uint64_t incidence_clamps = 0;
  std::uint64_t stratum_clamps = 0;
  std::uint64_t stratum_merges = 0;
  std::uint64_t missing_incidence_cells = 0;
  std::uint64_t incidence_clips = 0;
  std::uint64_t extrapolation_fallbacks = 0;
  std::uint64_t negative_slope_clips = 0;
  std::uint64_t interpolation_zero_endpoints = 0;
  std::uint64_t sp_clips = 0;
  std::uint64_t monotonicity_guards = 0;
  std::uint64_t sp_below_lifetable = 0;
  std::uint64_t weight_caps = 0;
  std::uint64_t empty_risk_sets = 0;
  std::uint64_t excluded_replicates = 0;

  void merge(const Diagnostics& other);

  // (name, value) pairs in a fixed order, for manifests and CSV footers.
  std::vector<std::pair<std::string, std::uint64_t>> items() const;
};

inline void bump(Diagnostics* diag, std::uint64_t Diagnostics::*field) {
  if (diag != nullptr) ++(diag->*field);
}

}  // namespace netadjust
