#include "netadjust/extrapolation.hpp"

#include <algorithm>
#include <cmath>

#include "netadjust/error.hpp"
#include "netadjust/log.hpp"

namespace netadjust {

std::vector<double> select_anchor_points(const StepSurvivalCurve& curve, double tau, int points) {
  if (points < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 anchor points");
  if (!(tau >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "end of follow-up must be >= 0");
  std::vector<double> anchors;
  for (int g = static_cast<int>(std::floor(tau)); g >= 0 && static_cast<int>(anchors.size()) < points;
       --g) {
    if (curve.at(g) > 0.0) anchors.push_back(g);
  }
  if (anchors.size() < 2) {
    throw Error(ErrorCode::kExtrapolation, "fewer than two positive grid points before tau");
  }
  std::reverse(anchors.begin(), anchors.end());
  return anchors;
}

TailFit fit_tail(const StepSurvivalCurve& curve, std::span<const double> anchors,
                 Diagnostics* diag) {
  const double n = static_cast<double>(anchors.size());
  double st = 0.0, stt = 0.0, sy = 0.0, sty = 0.0;
  for (double t : anchors) {
    double s = curve.at(t);
    if (!(s > 0.0)) throw Error(ErrorCode::kExtrapolation, "curve not positive at anchor");
    double y = -std::log(s);
    st += t;
    stt += t * t;
    sy += y;
    sty += t * y;
  }
  // (X'X)^{-1} X'y for X = [1, t*].
  double det = n * stt - st * st;
  if (anchors.size() < 2 || !(std::abs(det) > 1e-12 * std::max(1.0, n * stt))) {
    throw Error(ErrorCode::kExtrapolation, "singular anchor design");
  }
  TailFit fit;
  fit.gamma0 = (stt * sy - st * sty) / det;
  fit.gamma1 = (n * sty - st * sy) / det;
  if (fit.gamma1 < 0.0) {
    if (fit.gamma1 < -1e-12) logger().warn("negative tail slope {:.4g} clipped to 0", fit.gamma1);
    bump(diag, &Diagnostics::negative_slope_clips);
    fit.gamma1 = 0.0;
    fit.gamma0 = sy / n;
  }
  return fit;
}

double end_of_follow_up(const EventTable& table, int min_at_risk) {
  if (table.empty()) return 0.0;
  int floor = std::min<int>(min_at_risk, static_cast<int>(table.subjects()));
  double tau = table.times().front();
  for (std::size_t j = 0; j < table.size(); ++j) {
    if (table.at_risk()[j] >= floor) tau = table.times()[j];
  }
  return tau;
}

ExtendedSurvival::ExtendedSurvival(StepSurvivalCurve base, double tau, std::optional<TailFit> tail)
    : base_(std::move(base)), tau_(tau), value_at_tau_(base_.at(tau)), tail_(tail) {}

double ExtendedSurvival::at(double t) const {
  if (t <= tau_) return base_.at(t);
  if (!tail_) return value_at_tau_;
  double v = std::exp(-tail_->gamma0 - tail_->gamma1 * t);
  return std::clamp(std::min(v, value_at_tau_), 0.0, 1.0);
}

double extended_survival_at(const ExtendedSurvival& ext, double t) {
  if (!(t >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "extended survival: t must be >= 0");
  return ext.at(t);
}

ExtendedSurvival extend_survival(const EventTable& table, const ExtrapolationConfig& config,
                                 Diagnostics* diag) {
  StepSurvivalCurve km = kaplan_meier(table);
  double tau = end_of_follow_up(table, config.min_at_risk);
  try {
    auto anchors = select_anchor_points(km, tau, config.points);
    TailFit fit = fit_tail(km, anchors, diag);
    return {std::move(km), tau, fit};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kExtrapolation) throw;
    logger().info("tail extrapolation unavailable ({}); carrying S(tau) forward", e.what());
    bump(diag, &Diagnostics::extrapolation_fallbacks);
    return {std::move(km), tau, std::nullopt};
  }
}

namespace {

double interpolate_interval(std::span<const double> grid, std::size_t lo, double frac,
                            Diagnostics* diag) {
  double a = grid[lo];
  double b = grid[lo + 1];
  if (a > 0.0 && b > 0.0) return std::exp((1.0 - frac) * std::log(a) + frac * std::log(b));
  bump(diag, &Diagnostics::interpolation_zero_endpoints);
  if (a <= 0.0) return 0.0;
  if (lo > 0 && grid[lo - 1] > 0.0) return a * std::pow(a / grid[lo - 1], frac);
  return a + frac * (b - a);
}

}  // namespace

double loglinear_interpolate(std::span<const double> grid, double t, Diagnostics* diag) {
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "interpolation grid is empty");
  double last = static_cast<double>(grid.size() - 1);
  if (!(t >= 0.0 && t <= last)) {
    throw Error(ErrorCode::kInvalidArgument, "interpolation point outside the grid");
  }
  double lo = std::floor(t);
  if (lo == t) return grid[static_cast<std::size_t>(lo)];
  return interpolate_interval(grid, static_cast<std::size_t>(lo), t - lo, diag);
}

double loglinear_at(std::span<const double> grid, double t, Diagnostics* diag) {
  double last = static_cast<double>(grid.size() - 1);
  if (t <= last) return loglinear_interpolate(grid, t, diag);
  if (grid.size() < 2) return grid.back();
  double a = grid[grid.size() - 2];
  double b = grid.back();
  if (!(a > 0.0) || !(b > 0.0)) return b;
  return b * std::pow(b / a, t - last);
}

}  // namespace netadjust

namespace netadjust {

RegistryOverallSurvival::RegistryOverallSurvival(StrataMap strata,
                                                 const ExtrapolationConfig& config,
                                                 Diagnostics* diag)
    : strata_(std::move(strata)) {
  curves_.reserve(strata_.strata().size());
  for (const auto& s : strata_.strata()) curves_.push_back(extend_survival(s.table, config, diag));
}

double RegistryOverallSurvival::at(const StratumKey& key, double t, Diagnostics* diag) const {
  if (t <= 0.0) return 1.0;
  return curves_[strata_.resolve(key, diag)].at(t);
}

}  // namespace netadjust
