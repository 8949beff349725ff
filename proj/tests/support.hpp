#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "netadjust/extrapolation.hpp"
#include "netadjust/incidence.hpp"
#include "netadjust/lifetable.hpp"
#include "netadjust/registry.hpp"

namespace support {

inline std::string data_path(const std::string& name) {
  return std::string(NETADJUST_TEST_DATA) + "/" + name;
}

using CellFn = std::function<double(int age, int year, int sex)>;

inline std::vector<netadjust::LexisGrid::Cell> cells(int age_lo, int age_hi, int year_lo,
                                                     int year_hi, int sexes, const CellFn& fn) {
  std::vector<netadjust::LexisGrid::Cell> out;
  for (int s = 0; s < sexes; ++s)
    for (int y = year_lo; y <= year_hi; ++y)
      for (int a = age_lo; a <= age_hi; ++a) out.push_back({{a, y, {s}}, fn(a, y, s)});
  return out;
}

inline netadjust::LifeTable life_table(int age_hi, int year_lo, int year_hi, const CellFn& q,
                                       int sexes = 1) {
  return netadjust::LifeTable::from_cells(cells(0, age_hi, year_lo, year_hi, sexes, q));
}

inline netadjust::IncidenceTable incidence(int age_hi, int year_lo, int year_hi, const CellFn& ir,
                                           int sexes = 1) {
  return netadjust::IncidenceTable::from_cells(cells(0, age_hi, year_lo, year_hi, sexes, ir));
}

// Overall survival given as a closed-form function of key and time.
class FnSurvival final : public netadjust::OverallSurvival {
 public:
  using Fn = std::function<double(const netadjust::StratumKey&, double)>;
  explicit FnSurvival(Fn fn) : fn_(std::move(fn)) {}
  double at(const netadjust::StratumKey& key, double t, netadjust::Diagnostics* = nullptr) const override {
    return t <= 0.0 ? 1.0 : fn_(key, t);
  }

 private:
  Fn fn_;
};

// Exponential survival with per-subject censoring, keys drawn from the lists.
inline std::vector<netadjust::PatientRecord> random_registry(std::mt19937_64& rng, int n,
                                                             std::vector<int> ages, int year0,
                                                             int sexes, double hazard,
                                                             double censor_max) {
  std::uniform_int_distribution<std::size_t> pick(0, ages.size() - 1);
  std::uniform_int_distribution<int> sex(0, sexes - 1);
  std::exponential_distribution<double> death(hazard);
  std::uniform_real_distribution<double> censor(0.0, censor_max);
  std::vector<netadjust::PatientRecord> out;
  for (int i = 0; i < n; ++i) {
    int age = ages[pick(rng)];
    double t = death(rng), c = censor(rng);
    out.push_back({age, year0 + age, {sex(rng)}, std::min(t, c), t <= c});
  }
  return out;
}

}  // namespace support
