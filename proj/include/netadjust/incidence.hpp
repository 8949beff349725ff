#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "netadjust/diagnostics.hpp"
#include "netadjust/extrapolation.hpp"
#include "netadjust/lifetable.hpp"

namespace netadjust {

// Annual probability that a cancer-free member of a cell is diagnosed within
// the year. Cells inside the rectangle but absent from the input are 0.
class IncidenceTable {
 public:
  IncidenceTable() = default;
  static IncidenceTable from_cells(const std::vector<LexisGrid::Cell>& cells,
                                   Diagnostics* diag = nullptr);
  explicit IncidenceTable(LexisGrid grid);

  double ir(const StratumKey& key, Diagnostics* diag = nullptr) const;
  const LexisGrid& grid() const { return grid_; }

 private:
  LexisGrid grid_;
};

using CountTable = std::map<StratumKey, double>;

inline constexpr double kIncidenceCeiling = 1.0 - 1e-9;

// IR = diagnoses / person-years, clipped to [0, 1 - 1e-9].
IncidenceTable compute_incidence(const CountTable& diagnoses, const CountTable& person_years,
                                 Diagnostics* diag = nullptr);

IncidenceTable read_incidence_csv(std::istream& in, Diagnostics* diag = nullptr);
IncidenceTable load_incidence(const std::string& path, Diagnostics* diag = nullptr);
void write_incidence_csv(std::ostream& out, const IncidenceTable& table);
// `age,year,sex,<value_column>` count files used by compute_incidence.
CountTable read_count_csv(std::istream& in, const std::string& source,
                          const std::string& value_column);
CountTable load_counts(const std::string& path, const std::string& value_column);

// Where inside each year of the lag the registry survival is read when
// accumulating prevalence: at the year start (as published) or mid-year.
enum class WithinYearApprox { kYearStart, kMidYear };

// Prevalence α̂ on birth-cohort diagonals, by a single forward pass in age
// from α̂(age 0) = 0:
//   α̂(z_L) = Σ_{s=1}^{age} Ŝ_O(s | z_{L-s}) IR(z_{L-s}) (1 - α̂(z_{L-s}))
// The summands, divided by α̂(z_L), are the increments of F̂_{D→L}.
//
// With a `population` table each summand is divided by the diagonal survival
// S̃(s) from z_{L-s} to z_L, turning "cases per person alive at L-s" into
// "cases per person alive at L".
class PrevalenceModel {
 public:
  // Prepares every diagonal touched by `keys`, up to the largest age needed.
  PrevalenceModel(const IncidenceTable& incidence, const OverallSurvival& survival,
                  std::span<const StratumKey> keys,
                  WithinYearApprox approx = WithinYearApprox::kYearStart,
                  Diagnostics* diag = nullptr, const LifeTable* population = nullptr);

  double alpha(const StratumKey& key) const;
  // Summands w_s for s = 1..age (index 0 unused, always 0).
  std::vector<double> lag_weights(const StratumKey& key) const;

 private:
  using Diagonal = std::pair<int, Demographics>;  // (birth cohort, demographics)

  double lag_term(const StratumKey& origin_cell, int lag, double alpha_origin,
                  const std::vector<double>& log_population) const;

  const IncidenceTable* incidence_;
  const OverallSurvival* survival_;
  WithinYearApprox approx_;
  Diagnostics* diag_;
  std::map<Diagonal, std::vector<double>> alpha_;
  std::map<Diagonal, std::vector<double>> log_population_;  // log S̃ from birth; empty if unused
};

double prevalence_alpha(const PrevalenceModel& model, const StratumKey& key);

// F̂_{D→L}(t | z_L, X=1). Throws kInvalidArgument when α̂(z_L) = 0.
double f_d_to_l(const PrevalenceModel& model, const StratumKey& key, int t);

// F̂_{L→D}(t | z_L, X=0) = 1 - Π_{s=0}^{t-1} (1 - IR(z_{L+s})).
double f_l_to_d(const IncidenceTable& incidence, const StratumKey& key, int t,
                Diagnostics* diag = nullptr);

// ΔF̂_k = F̂_{L→D}(k) - F̂_{L→D}(k-1), k >= 1.
double delta_f(const IncidenceTable& incidence, const StratumKey& key, int k,
               Diagnostics* diag = nullptr);

}  // namespace netadjust
