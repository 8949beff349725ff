#include "netadjust/lifetable.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "csv.hpp"
#include "netadjust/error.hpp"
#include "netadjust/log.hpp"

namespace netadjust {

// ---------------------------------------------------------------------------
// LexisGrid

LexisGrid::LexisGrid(int age_min, int age_max, int year_min, int year_max,
                     std::vector<Demographics> demographics, double fill)
    : age_min_(age_min),
      age_max_(age_max),
      year_min_(year_min),
      year_max_(year_max),
      demos_(std::move(demographics)) {
  if (age_max < age_min || year_max < year_min || demos_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "lexis grid: empty rectangle");
  }
  std::sort(demos_.begin(), demos_.end());
  values_.assign(static_cast<std::size_t>(age_max - age_min + 1) *
                     static_cast<std::size_t>(year_max - year_min + 1) * demos_.size(),
                 fill);
}

std::size_t LexisGrid::demo_index(const Demographics& demo) const {
  auto it = std::lower_bound(demos_.begin(), demos_.end(), demo);
  if (it == demos_.end() || *it != demo) {
    StratumKey probe{0, 0, demo};
    throw Error(ErrorCode::kMissingCell, "no table rows for demographics " + to_string(probe));
  }
  return static_cast<std::size_t>(it - demos_.begin());
}

std::size_t LexisGrid::offset(int age, int year, std::size_t demo) const {
  std::size_t ages = static_cast<std::size_t>(age_max_ - age_min_ + 1);
  std::size_t years = static_cast<std::size_t>(year_max_ - year_min_ + 1);
  return (demo * years + static_cast<std::size_t>(year - year_min_)) * ages +
         static_cast<std::size_t>(age - age_min_);
}

bool LexisGrid::contains(const StratumKey& key) const {
  return key.age >= age_min_ && key.age <= age_max_ && key.year >= year_min_ &&
         key.year <= year_max_ && std::binary_search(demos_.begin(), demos_.end(), key.demo);
}

double LexisGrid::at(const StratumKey& key, std::uint64_t* clamped) const {
  int a = std::clamp(key.age, age_min_, age_max_);
  int y = std::clamp(key.year, year_min_, year_max_);
  if (clamped != nullptr && (a != key.age || y != key.year)) ++*clamped;
  return values_[offset(a, y, demo_index(key.demo))];
}

void LexisGrid::set(const StratumKey& key, double value) {
  if (key.age < age_min_ || key.age > age_max_ || key.year < year_min_ || key.year > year_max_) {
    throw Error(ErrorCode::kOutOfRange, "lexis grid: cell outside rectangle " + to_string(key));
  }
  values_[offset(key.age, key.year, demo_index(key.demo))] = value;
}

// ---------------------------------------------------------------------------
// LifeTable

LifeTable::LifeTable(LexisGrid grid) : grid_(std::move(grid)) {}

LifeTable LifeTable::from_cells(const std::vector<LexisGrid::Cell>& cells) {
  if (cells.empty()) throw Error(ErrorCode::kEmptyInput, "life table: no rows");
  int a0 = cells.front().key.age, a1 = a0;
  int y0 = cells.front().key.year, y1 = y0;
  std::set<Demographics> demos;
  std::set<StratumKey> seen;
  for (const auto& c : cells) {
    if (!(c.value >= 0.0 && c.value <= 1.0)) {
      throw Error(ErrorCode::kOutOfRange,
                  "life table: q=" + csv::format_double(c.value) + " outside [0,1] at " +
                      to_string(c.key));
    }
    if (!seen.insert(c.key).second) {
      throw Error(ErrorCode::kDuplicateKey, "life table: duplicate row " + to_string(c.key));
    }
    a0 = std::min(a0, c.key.age);
    a1 = std::max(a1, c.key.age);
    y0 = std::min(y0, c.key.year);
    y1 = std::max(y1, c.key.year);
    demos.insert(c.key.demo);
  }
  LexisGrid grid(a0, a1, y0, y1, {demos.begin(), demos.end()}, 0.0);
  if (seen.size() != grid.cell_count()) {
    // Report the first hole.
    grid.for_each([&](const StratumKey& key, double) {
      if (seen.count(key) == 0) {
        throw Error(ErrorCode::kMissingCell, "life table: missing cell " + to_string(key));
      }
    });
  }
  for (const auto& c : cells) grid.set(c.key, c.value);
  return LifeTable(std::move(grid));
}

double LifeTable::q(const StratumKey& key, Diagnostics* diag) const {
  return grid_.at(key, diag != nullptr ? &diag->lifetable_clamps : nullptr);
}

std::vector<LexisGrid::Cell> read_lexis_cells(std::istream& in, const std::string& source,
                                              const std::string& value_column) {
  csv::Reader reader(in, source, {"age", "year", "sex", value_column});
  std::vector<LexisGrid::Cell> cells;
  while (reader.next()) {
    LexisGrid::Cell cell;
    cell.key = {reader.integer(0), reader.integer(1), {reader.integer(2)}};
    cell.value = reader.real(3);
    if (cell.key.age < 0) reader.fail("age must be >= 0");
    cells.push_back(std::move(cell));
  }
  return cells;
}

LifeTable read_life_table_csv(std::istream& in) {
  return LifeTable::from_cells(read_lexis_cells(in, "life table", "q"));
}

LifeTable load_life_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open life table " + path);
  return read_life_table_csv(in);
}

void write_life_table_csv(std::ostream& out, const LifeTable& table) {
  out << "age,year,sex,q\n";
  table.grid().for_each([&](const StratumKey& key, double q) {
    out << key.age << ',' << key.year << ',' << key.demo.at(0) << ',' << csv::format_double(q)
        << '\n';
  });
}

// ---------------------------------------------------------------------------
// Diagonal extraction

DiagonalSurvival diagonal_survival(const LifeTable& table, const StratumKey& origin, int horizon,
                                   Diagnostics* diag) {
  if (horizon < 0) throw Error(ErrorCode::kInvalidArgument, "diagonal_survival: horizon < 0");
  std::vector<double> values(static_cast<std::size_t>(horizon) + 1);
  values[0] = 1.0;
  for (int t = 1; t <= horizon; ++t) {
    values[t] = values[t - 1] * (1.0 - table.q(origin.shifted(t - 1), diag));
  }
  return {origin, std::move(values)};
}

double diagonal_cumulative_hazard(const LifeTable& table, const StratumKey& origin, double t,
                                  Diagnostics* diag) {
  if (!(t >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "cumulative hazard: t must be >= 0");
  double total = 0.0;
  int whole = static_cast<int>(std::floor(t));
  double frac = t - whole;
  for (int j = 0; j <= whole; ++j) {
    double weight = j < whole ? 1.0 : frac;
    if (weight == 0.0) break;
    StratumKey cell = origin.shifted(j);
    double q = table.q(cell, diag);
    if (q >= 1.0) {
      throw Error(ErrorCode::kInfiniteHazard, "q = 1 gives infinite hazard at " + to_string(cell));
    }
    total += -std::log1p(-q) * weight;
  }
  return total;
}

}  // namespace netadjust
