#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "netadjust/diagnostics.hpp"
#include "netadjust/registry.hpp"

namespace netadjust {

// Dense (age, year, demographics) rectangle of annual values. Lookups outside
// the declared rectangle clamp age and year independently to the nearest
// edge; unknown demographics are an error.
class LexisGrid {
 public:
  struct Cell {
    StratumKey key;
    double value = 0.0;
  };

  LexisGrid() = default;
  LexisGrid(int age_min, int age_max, int year_min, int year_max,
            std::vector<Demographics> demographics, double fill);

  int age_min() const { return age_min_; }
  int age_max() const { return age_max_; }
  int year_min() const { return year_min_; }
  int year_max() const { return year_max_; }
  const std::vector<Demographics>& demographics() const { return demos_; }
  std::size_t cell_count() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  bool contains(const StratumKey& key) const;
  // Clamped lookup; `clamped` (if given) is incremented when clamping occurs.
  double at(const StratumKey& key, std::uint64_t* clamped = nullptr) const;
  void set(const StratumKey& key, double value);

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t d = 0; d < demos_.size(); ++d)
      for (int y = year_min_; y <= year_max_; ++y)
        for (int a = age_min_; a <= age_max_; ++a)
          fn(StratumKey{a, y, demos_[d]}, values_[offset(a, y, d)]);
  }

 private:
  std::size_t demo_index(const Demographics& demo) const;
  std::size_t offset(int age, int year, std::size_t demo) const;

  int age_min_ = 0, age_max_ = -1, year_min_ = 0, year_max_ = -1;
  std::vector<Demographics> demos_;
  std::vector<double> values_;
};

// Annual conditional death probabilities q(age, year, demographics).
class LifeTable {
 public:
  LifeTable() = default;
  // Validates completeness of the rectangle spanned by the cells, q in [0,1]
  // and uniqueness of keys.
  static LifeTable from_cells(const std::vector<LexisGrid::Cell>& cells);
  explicit LifeTable(LexisGrid grid);

  double q(const StratumKey& key, Diagnostics* diag = nullptr) const;
  const LexisGrid& grid() const { return grid_; }

 private:
  LexisGrid grid_;
};

// S̃(t) for t = 0..K along the cohort diagonal starting at `origin`.
class DiagonalSurvival {
 public:
  DiagonalSurvival(StratumKey origin, std::vector<double> values)
      : origin_(std::move(origin)), values_(std::move(values)) {}

  const StratumKey& origin() const { return origin_; }
  int horizon() const { return static_cast<int>(values_.size()) - 1; }
  double at(int t) const { return values_.at(static_cast<std::size_t>(t)); }
  const std::vector<double>& values() const { return values_; }

 private:
  StratumKey origin_;
  std::vector<double> values_;
};

LifeTable read_life_table_csv(std::istream& in);
LifeTable load_life_table(const std::string& path);
void write_life_table_csv(std::ostream& out, const LifeTable& table);

DiagonalSurvival diagonal_survival(const LifeTable& table, const StratumKey& origin, int horizon,
                                   Diagnostics* diag = nullptr);

// Piecewise-linear cumulative hazard along the diagonal, with constant hazard
// -log(1 - q) inside each year.
double diagonal_cumulative_hazard(const LifeTable& table, const StratumKey& origin, double t,
                                  Diagnostics* diag = nullptr);

// Shared by life-table and incidence ingestion: reads `age,year,sex,<value>`.
std::vector<LexisGrid::Cell> read_lexis_cells(std::istream& in, const std::string& source,
                                              const std::string& value_column);

}  // namespace netadjust
