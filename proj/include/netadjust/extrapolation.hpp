#pragma once

#include <optional>
#include <span>
#include <vector>

#include "netadjust/diagnostics.hpp"
#include "netadjust/registry.hpp"

namespace netadjust {

struct ExtrapolationConfig {
  int points = 4;       // H, number of anchor grid points
  int min_at_risk = 5;  // risk-set floor that defines the end of follow-up
};

struct TailFit {
  double gamma0 = 0.0;
  double gamma1 = 0.0;
};

// Last `points` integer grid points <= tau where the curve is strictly
// positive. Throws kExtrapolation when fewer than two exist.
std::vector<double> select_anchor_points(const StepSurvivalCurve& curve, double tau, int points);

// Least-squares fit of -log S(t*) = gamma0 + gamma1 t*. A negative slope is
// clipped to zero (intercept refitted as the mean response).
TailFit fit_tail(const StepSurvivalCurve& curve, std::span<const double> anchors,
                 Diagnostics* diag = nullptr);

// Largest observed time whose risk set still holds min(min_at_risk, n)
// subjects.
double end_of_follow_up(const EventTable& table, int min_at_risk);

// Kaplan-Meier up to tau, log-linear tail afterwards, clipped to S(tau).
class ExtendedSurvival {
 public:
  ExtendedSurvival() = default;
  ExtendedSurvival(StepSurvivalCurve base, double tau, std::optional<TailFit> tail);

  double at(double t) const;
  const StepSurvivalCurve& base() const { return base_; }
  double tau() const { return tau_; }
  const std::optional<TailFit>& tail() const { return tail_; }

 private:
  StepSurvivalCurve base_;
  double tau_ = 0.0;
  double value_at_tau_ = 1.0;
  std::optional<TailFit> tail_;  // empty: carry S(tau) forward
};

double extended_survival_at(const ExtendedSurvival& ext, double t);

// Builds the extended curve for one stratum; falls back to carrying the last
// value forward (counted) when no tail can be fitted.
ExtendedSurvival extend_survival(const EventTable& table, const ExtrapolationConfig& config,
                                 Diagnostics* diag = nullptr);

// exp of the linear interpolation of log values between the bracketing grid
// points; grid[i] is the value at t = i and t must lie in [0, grid.size()-1].
double loglinear_interpolate(std::span<const double> grid, double t, Diagnostics* diag = nullptr);

// Same inside the grid; beyond the last point continues the geometric decay
// of the final interval (constant hazard).
double loglinear_at(std::span<const double> grid, double t, Diagnostics* diag = nullptr);

}  // namespace netadjust

namespace netadjust {

// Ŝ_O(t | Z_D = key) for any lattice key.
class OverallSurvival {
 public:
  virtual ~OverallSurvival() = default;
  virtual double at(const StratumKey& key, double t, Diagnostics* diag = nullptr) const = 0;
};

// Extended Kaplan-Meier per registry stratum; keys outside the registry's
// covariate range resolve through StrataMap::resolve.
class RegistryOverallSurvival final : public OverallSurvival {
 public:
  RegistryOverallSurvival(StrataMap strata, const ExtrapolationConfig& config,
                          Diagnostics* diag = nullptr);

  double at(const StratumKey& key, double t, Diagnostics* diag = nullptr) const override;
  const StrataMap& strata() const { return strata_; }
  const std::vector<ExtendedSurvival>& curves() const { return curves_; }

 private:
  StrataMap strata_;
  std::vector<ExtendedSurvival> curves_;
};

}  // namespace netadjust
