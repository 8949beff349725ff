#include "netadjust/registry.hpp"

#include <algorithm>
#include <memory>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include "csv.hpp"
#include "netadjust/error.hpp"
#include "netadjust/log.hpp"

namespace netadjust {

std::string to_string(const StratumKey& key) {
  std::string out = "(age=" + std::to_string(key.age) + ", year=" + std::to_string(key.year);
  for (std::size_t i = 0; i < key.demo.size(); ++i) {
    out += i == 0 ? ", demo=" : "/";
    out += std::to_string(key.demo[i]);
  }
  return out + ")";
}

// ---------------------------------------------------------------------------
// EventTable

EventTable EventTable::from_observations(std::span<const double> times,
                                         std::span<const bool> events) {
  if (times.size() != events.size()) {
    throw Error(ErrorCode::kInvalidArgument, "times and events differ in length");
  }
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw Error(ErrorCode::kOutOfRange, "observed time must be finite and nonnegative");
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  EventTable table;
  table.subjects_ = times.size();
  int remaining = static_cast<int>(times.size());
  std::size_t i = 0;
  while (i < order.size()) {
    double t = times[order[i]];
    int deaths = 0;
    int censored = 0;
    while (i < order.size() && times[order[i]] == t) {
      if (events[order[i]]) {
        ++deaths;
      } else {
        ++censored;
      }
      ++i;
    }
    table.times_.push_back(t);
    table.at_risk_.push_back(remaining);
    table.deaths_.push_back(deaths);
    table.censored_.push_back(censored);
    remaining -= deaths + censored;
  }
  return table;
}

EventTable EventTable::from_records(std::span<const PatientRecord> records) {
  std::vector<double> times;
  std::vector<char> events;
  times.reserve(records.size());
  events.reserve(records.size());
  for (const auto& r : records) {
    times.push_back(r.time);
    events.push_back(r.event ? 1 : 0);
  }
  // std::vector<bool> has no contiguous storage; go through a bool array.
  std::unique_ptr<bool[]> flags(new bool[events.size()]);
  for (std::size_t i = 0; i < events.size(); ++i) flags[i] = events[i] != 0;
  return from_observations(times, std::span<const bool>(flags.get(), events.size()));
}

// ---------------------------------------------------------------------------
// Step functions

StepFunction::StepFunction(double initial, std::vector<double> times, std::vector<double> values)
    : initial_(initial), times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() != values_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "step function: times and values differ in length");
  }
  if (!std::is_sorted(times_.begin(), times_.end())) {
    throw Error(ErrorCode::kInvalidArgument, "step function: jump times must be ascending");
  }
}

double StepFunction::operator()(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

StepSurvivalCurve::StepSurvivalCurve(std::vector<double> times, std::vector<double> values)
    : fn_(1.0, std::move(times), std::move(values)) {
  double prev = 1.0;
  for (double v : fn_.values()) {
    if (v < 0.0 || v > prev) {
      throw Error(ErrorCode::kInvalidArgument,
                  "survival curve must be non-increasing within [0, 1]");
    }
    prev = v;
  }
}

CumulativeHazardCurve::CumulativeHazardCurve(std::vector<double> times, std::vector<double> values)
    : fn_(0.0, std::move(times), std::move(values)) {
  double prev = 0.0;
  for (double v : fn_.values()) {
    if (v < prev) {
      throw Error(ErrorCode::kInvalidArgument, "cumulative hazard must be non-decreasing");
    }
    prev = v;
  }
}

StepSurvivalCurve kaplan_meier(const EventTable& table) {
  std::vector<double> times;
  std::vector<double> values;
  double s = 1.0;
  for (std::size_t j = 0; j < table.size(); ++j) {
    int d = table.deaths()[j];
    if (d == 0) continue;
    s *= 1.0 - static_cast<double>(d) / table.at_risk()[j];
    times.push_back(table.times()[j]);
    values.push_back(s);
  }
  return {std::move(times), std::move(values)};
}

CumulativeHazardCurve nelson_aalen(const EventTable& table) {
  std::vector<double> times;
  std::vector<double> values;
  double h = 0.0;
  for (std::size_t j = 0; j < table.size(); ++j) {
    int d = table.deaths()[j];
    if (d == 0) continue;
    h += static_cast<double>(d) / table.at_risk()[j];
    times.push_back(table.times()[j]);
    values.push_back(h);
  }
  return {std::move(times), std::move(values)};
}

double survival_at(const StepSurvivalCurve& curve, double t) {
  if (!(t >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "survival_at: t must be >= 0");
  return curve.at(t);
}

// ---------------------------------------------------------------------------
// Stratification

namespace {

int floor_to(int value, int width) {
  int q = value / width;
  if (value % width != 0 && value < 0) --q;
  return q * width;
}

}  // namespace

StrataMap::StrataMap(std::vector<Stratum> strata, Banding banding)
    : strata_(std::move(strata)), banding_(banding) {
  bool first = true;
  for (std::size_t i = 0; i < strata_.size(); ++i) {
    for (const auto& member : strata_[i].members) {
      index_[member] = i;
      if (first) {
        age_lo_ = age_hi_ = member.age;
        year_lo_ = year_hi_ = member.year;
        first = false;
      }
      age_lo_ = std::min(age_lo_, member.age);
      age_hi_ = std::max(age_hi_, member.age);
      year_lo_ = std::min(year_lo_, member.year);
      year_hi_ = std::max(year_hi_, member.year);
    }
  }
}

std::size_t StrataMap::total_subjects() const {
  std::size_t n = 0;
  for (const auto& s : strata_) n += s.table.subjects();
  return n;
}

StratumKey StrataMap::band(const StratumKey& key) const {
  return {floor_to(key.age, banding_.age_width), floor_to(key.year, banding_.year_width), key.demo};
}

const Stratum* StrataMap::find(const StratumKey& key) const {
  auto it = index_.find(band(key));
  return it == index_.end() ? nullptr : &strata_[it->second];
}

std::size_t StrataMap::resolve(const StratumKey& key, Diagnostics* diag) const {
  if (strata_.empty()) throw Error(ErrorCode::kEmptyInput, "no strata to resolve against");
  StratumKey banded = band(key);
  if (auto it = index_.find(banded); it != index_.end()) return it->second;

  bump(diag, &Diagnostics::stratum_clamps);
  StratumKey clamped = banded;
  clamped.age = std::clamp(clamped.age, age_lo_, age_hi_);
  clamped.year = std::clamp(clamped.year, year_lo_, year_hi_);
  if (auto it = index_.find(clamped); it != index_.end()) return it->second;

  // Nearest member key: demographics match first, then L1 distance on the
  // clamped coordinates; map order breaks ties deterministically.
  std::size_t best = 0;
  long best_score = std::numeric_limits<long>::max();
  for (const auto& [member, idx] : index_) {
    long score = std::abs(member.age - clamped.age) + std::abs(member.year - clamped.year);
    if (member.demo != clamped.demo) score += 1'000'000;
    if (score < best_score) {
      best_score = score;
      best = idx;
    }
  }
  return best;
}

StrataMap build_strata(std::span<const PatientRecord> records, const Banding& banding,
                       Diagnostics* diag) {
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "registry has no records");
  if (banding.age_width < 1 || banding.year_width < 1) {
    throw Error(ErrorCode::kInvalidArgument, "band widths must be >= 1");
  }

  StrataMap probe({}, banding);
  std::map<StratumKey, std::vector<PatientRecord>> groups;
  for (const auto& r : records) groups[probe.band(r.key())].push_back(r);

  struct Group {
    StratumKey key;
    std::vector<StratumKey> members;
    std::vector<PatientRecord> records;
  };
  std::vector<Group> work;
  for (auto& [key, recs] : groups) work.push_back({key, {key}, std::move(recs)});

  // Fold undersized strata into an adjacent age band (same year band and
  // demographics), smallest first, until none can be merged further.
  while (true) {
    std::size_t victim = work.size();
    std::size_t target = work.size();
    for (std::size_t i = 0; i < work.size(); ++i) {
      if (static_cast<int>(work[i].records.size()) >= banding.min_stratum_size) continue;
      if (victim != work.size() && work[i].records.size() >= work[victim].records.size()) continue;
      std::size_t found = work.size();
      for (int dir : {-1, +1}) {
        for (std::size_t j = 0; j < work.size() && found == work.size(); ++j) {
          if (j == i) continue;
          for (const auto& m : work[j].members) {
            bool adjacent = false;
            for (const auto& own : work[i].members) {
              if (m.demo == own.demo && m.year == own.year &&
                  m.age == own.age + dir * banding.age_width) {
                adjacent = true;
              }
            }
            if (adjacent) {
              found = j;
              break;
            }
          }
        }
        if (found != work.size()) break;
      }
      if (found != work.size()) {
        victim = i;
        target = found;
      }
    }
    if (victim == work.size()) break;

    auto& dst = work[target];
    auto& src = work[victim];
    logger().info("merging stratum {} (n={}) into {} (n={})", to_string(src.key),
                  src.records.size(), to_string(dst.key), dst.records.size());
    bump(diag, &Diagnostics::stratum_merges);
    dst.members.insert(dst.members.end(), src.members.begin(), src.members.end());
    dst.records.insert(dst.records.end(), src.records.begin(), src.records.end());
    if (src.records.size() > dst.records.size() - src.records.size()) dst.key = src.key;
    work.erase(work.begin() + static_cast<std::ptrdiff_t>(victim));
  }

  std::vector<Stratum> strata;
  strata.reserve(work.size());
  for (auto& g : work) {
    std::sort(g.members.begin(), g.members.end());
    strata.push_back({g.key, std::move(g.members), EventTable::from_records(g.records)});
  }
  return StrataMap(std::move(strata), banding);
}

// ---------------------------------------------------------------------------
// CSV

std::vector<PatientRecord> read_registry_csv(std::istream& in) {
  csv::Reader reader(in, "registry", {"age_diag", "year_diag", "sex", "time", "event"});
  std::vector<PatientRecord> records;
  while (reader.next()) {
    PatientRecord r;
    r.age_diag = reader.integer(0);
    r.year_diag = reader.integer(1);
    r.demo = {reader.integer(2)};
    r.time = reader.real(3);
    int event = reader.integer(4);
    if (r.age_diag < 0) reader.fail("age_diag must be >= 0");
    if (!(r.time >= 0.0) || !std::isfinite(r.time)) reader.fail("time must be >= 0");
    if (event != 0 && event != 1) reader.fail("event must be 0 or 1");
    r.event = event == 1;
    records.push_back(std::move(r));
  }
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "registry: no rows");
  return records;
}

std::vector<PatientRecord> load_registry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open registry file " + path);
  return read_registry_csv(in);
}

void write_registry_csv(std::ostream& out, std::span<const PatientRecord> records) {
  out << "age_diag,year_diag,sex,time,event\n";
  for (const auto& r : records) {
    out << r.age_diag << ',' << r.year_diag << ',' << (r.demo.empty() ? 0 : r.demo[0]) << ','
        << csv::format_double(r.time) << ',' << (r.event ? 1 : 0) << '\n';
  }
}

}  // namespace netadjust
