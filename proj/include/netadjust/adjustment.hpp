#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "netadjust/diagnostics.hpp"
#include "netadjust/extrapolation.hpp"
#include "netadjust/incidence.hpp"
#include "netadjust/lifetable.hpp"
#include "netadjust/population.hpp"

namespace netadjust {

// How the survival of prevalent cases beyond the life-table origin is read
// from the registry curve for a case diagnosed s years earlier:
//   kConditional    Ŝ_O(t+s) / Ŝ_O(s)   (survivors to the origin; S(0) = 1)
//   kUnconditional  Ŝ_O(t+s)            (literal convolution form)
enum class PrevalentSurvivalMode { kConditional, kUnconditional };

struct AdjustmentConfig {
  int horizon = 15;  // K
  ExtrapolationConfig extrapolation;
  WithinYearApprox within_year = WithinYearApprox::kMidYear;
  PrevalentSurvivalMode prevalent_mode = PrevalentSurvivalMode::kConditional;
  bool normalize_prevalence = true;  // divide prevalence summands by S̃(s)
  double clip_floor = 1e-9;
  double min_ratio = 1e-6;  // r̂(t) below this is a hard error
};

// Ŝ_{L→O}(t | z_L, X=1) for t = 0..K.
class PrevalentCaseSurvival {
 public:
  PrevalentCaseSurvival(StratumKey origin, std::vector<double> values)
      : origin_(std::move(origin)), values_(std::move(values)) {}
  const StratumKey& origin() const { return origin_; }
  double at(int t) const { return values_.at(static_cast<std::size_t>(t)); }
  const std::vector<double>& values() const { return values_; }

 private:
  StratumKey origin_;
  std::vector<double> values_;
};

PrevalentCaseSurvival prevalent_case_survival(const StratumKey& origin,
                                              const OverallSurvival& survival,
                                              const PrevalenceModel& prevalence, int horizon,
                                              PrevalentSurvivalMode mode,
                                              Diagnostics* diag = nullptr);

// Everything the discrete integral equation needs at one lattice key. The
// equation at key z and horizon t references Ŝ_P(t-k | z+k) for k < t, so
// the lattice is closed under forward shifts with decreasing horizons.
struct LatticeCell {
  StratumKey key;
  int horizon = 0;                // solve for t = 1..horizon
  std::vector<double> lifetable;  // S̃_{L→O}(t), t = 0..horizon
  double alpha = 0.0;
  std::vector<double> prevalent;  // Ŝ_{L→O}(t | X=1); empty when alpha == 0
  std::vector<double> delta_f;    // ΔF̂_k at index k = 1..horizon
  std::vector<double> overall;    // Ŝ_O(t | key), t = 0..horizon
  std::vector<int> shifted;       // shifted[k] = cell index of key+k, k = 1..horizon-1
};

struct Lattice {
  std::vector<LatticeCell> cells;
  std::map<StratumKey, std::size_t> index;

  const LatticeCell& cell(const StratumKey& key) const;
};

// Keys reachable from `base` and the horizon each one must be solved to.
std::map<StratumKey, int> lattice_horizons(std::span<const StratumKey> base, int horizon);

Lattice build_lattice(std::span<const StratumKey> base, const LifeTable& life_table,
                      const IncidenceTable& incidence, const OverallSurvival& survival,
                      const AdjustmentConfig& config, Diagnostics* diag = nullptr);

struct LatticeSolution {
  std::vector<std::vector<double>> survival;  // Ŝ_P(t), t = 0..horizon, per cell
  std::vector<std::vector<double>> ratio;     // r̂(t), t = 0..horizon, per cell
};

// Horizon-major recursion: t = 1..K outer, cells inner.
LatticeSolution solve_s_p(const Lattice& lattice, const AdjustmentConfig& config,
                          Diagnostics* diag = nullptr);

// Independent route: assembles each cell's strictly lower-triangular kernel
// matrix explicitly and evaluates r̂ = 1 - H ΔF̂ as a matrix-vector product,
// sweeping the whole lattice until the nilpotent system is exhausted.
LatticeSolution solve_s_p_linear_system(const Lattice& lattice, const AdjustmentConfig& config,
                                        Diagnostics* diag = nullptr);

// Ŝ_P(t | Z_D = origin) on t = 0..K with log-linear interpolation.
class AdjustedPopulationSurvival {
 public:
  AdjustedPopulationSurvival(StratumKey origin, std::vector<double> grid)
      : origin_(std::move(origin)), grid_(std::move(grid)) {}
  const StratumKey& origin() const { return origin_; }
  const std::vector<double>& grid() const { return grid_; }
  double at(double t) const;
  double cumulative_hazard(double t) const;

 private:
  StratumKey origin_;
  std::vector<double> grid_;
};

struct AdjustmentResult {
  Lattice lattice;
  LatticeSolution solution;

  AdjustedPopulationSurvival survival(const StratumKey& key) const;
};

AdjustmentResult adjust_population_survival(std::span<const StratumKey> base,
                                            const LifeTable& life_table,
                                            const IncidenceTable& incidence,
                                            const OverallSurvival& survival,
                                            const AdjustmentConfig& config,
                                            Diagnostics* diag = nullptr);

// Provider over the base keys of an adjustment.
GridPopulationSurvival adjusted_survival_provider(const AdjustmentResult& result,
                                                  std::span<const StratumKey> keys);

// `age,year,sex,t,s_p,lifetable,alpha,r` for each key and t = 0..horizon.
void write_adjusted_csv(std::ostream& out, const AdjustmentResult& result,
                        std::span<const StratumKey> keys);

}  // namespace netadjust
