#include "netadjust/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "csv.hpp"
#include "netadjust/error.hpp"
#include "netadjust/estimators.hpp"
#include "netadjust/log.hpp"

namespace netadjust::sim {

namespace {

constexpr std::uint64_t kCensorOffset = 1000000;
constexpr std::uint64_t kTruthOffset = 2000000;

// β = (log 1.2 / 7.5, log 0.95 / 15, log 0.8)
const double kBetaAge = std::log(1.2) / 7.5;
const double kBetaYear = std::log(0.95) / 15.0;
const double kBetaGender = std::log(0.8);

struct Laws {
  bool weibull_d;
  double d1, d2;  // Weibull (rate, shape) or log-normal (meanlog, sdlog)
  bool weibull_p;
  double p1, p2;
};

Laws laws(int dataset) {
  switch (dataset) {
    case 1: return {true, 0.5e-2, 1.0, true, 1.0e-2, 2.0};
    case 2: return {true, 1.5e-2, 1.0, true, 1.0e-2, 2.0};
    case 3: return {false, std::log(65.0), 2.0, false, std::log(75.0), 2.0};
    case 4: return {false, std::log(65.0), 1.0, false, std::log(75.0), 2.0};
    default: throw Error(ErrorCode::kInvalidArgument, "dataset must be 1..4");
  }
}

double draw(std::mt19937_64& rng, bool weibull, double a, double b) {
  if (weibull) return std::weibull_distribution<double>(b, 1.0 / a)(rng);
  return std::lognormal_distribution<double>(a, b)(rng);
}

bool in_window(const SubjectHistory& s, const ScenarioConfig& cfg) {
  return s.diagnosed() && s.t_d >= cfg.window_min && s.t_d < cfg.window_max;
}

PatientRecord to_record(const SubjectHistory& s, const ScenarioConfig& cfg, double time, bool event) {
  const int age = static_cast<int>(std::floor(s.t_d));
  return {age, cfg.birth_year + age, {s.gender}, time, event};
}

}  // namespace

void validate(const ScenarioConfig& cfg) {
  laws(cfg.dataset);
  if (cfg.cohort_size < 1) throw Error(ErrorCode::kInvalidArgument, "cohort_size must be >= 1");
  if (cfg.reps < 1) throw Error(ErrorCode::kInvalidArgument, "reps must be >= 1");
  if (cfg.horizon < 1) throw Error(ErrorCode::kInvalidArgument, "horizon must be >= 1");
  if (cfg.extrapolation_points < 2) {
    throw Error(ErrorCode::kInvalidArgument, "extrapolation_points must be >= 2");
  }
  if (!(cfg.window_min < cfg.window_max) || cfg.window_min < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid diagnosis window");
  }
  if (!(cfg.censor_max > 0.0)) throw Error(ErrorCode::kInvalidArgument, "censor_max must be > 0");
  if (cfg.max_table_age < 1) throw Error(ErrorCode::kInvalidArgument, "max_table_age must be >= 1");
  if (cfg.truth_size < 1) throw Error(ErrorCode::kInvalidArgument, "truth_size must be >= 1");
  if (cfg.jobs < 1) throw Error(ErrorCode::kInvalidArgument, "jobs must be >= 1");
  for (double y : cfg.years) {
    if (!(y >= 0.0) || y > cfg.horizon) {
      throw Error(ErrorCode::kInvalidArgument, "report years must lie in [0, horizon]");
    }
  }
}

double excess_hazard(double age, double year, int gender) {
  const double lambda = 0.1 * std::exp(-kBetaAge * 60.0 - kBetaYear * (2000.0 - 1960.0));
  return lambda * std::exp(kBetaAge * age + kBetaYear * (year - 1960.0) + kBetaGender * gender);
}

std::vector<SubjectHistory> generate_cohort(const ScenarioConfig& cfg, std::uint64_t seed) {
  const Laws law = laws(cfg.dataset);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<SubjectHistory> cohort(static_cast<std::size_t>(cfg.cohort_size));
  for (auto& s : cohort) {
    s.gender = coin(rng) ? 1 : 0;
    s.t_d = draw(rng, law.weibull_d, law.d1, law.d2);
    s.t_p = draw(rng, law.weibull_p, law.p1, law.p2);
    if (s.diagnosed()) {
      const double rate = excess_hazard(s.t_d, cfg.birth_year + s.t_d, s.gender);
      s.t_de = std::exponential_distribution<double>(rate)(rng);
      s.t_do = std::min(s.t_de, s.t_p - s.t_d);
    }
  }
  return cohort;
}

double other_cause_survival(int dataset, double age) {
  const Laws law = laws(dataset);
  if (age <= 0.0) return 1.0;
  if (law.weibull_p) return std::exp(-std::pow(law.p1 * age, law.p2));
  return 0.5 * std::erfc((std::log(age) - law.p1) / (law.p2 * std::sqrt(2.0)));
}

double true_population_survival(int dataset, int age, double t) {
  const double base = other_cause_survival(dataset, age);
  if (!(base > 0.0)) return 0.0;
  return other_cause_survival(dataset, age + t) / base;
}

DerivedTables derive_tables(std::span<const SubjectHistory> cohort, const ScenarioConfig& cfg,
                            Diagnostics* diag) {
  if (cohort.empty()) throw Error(ErrorCode::kEmptyInput, "derive_tables: empty cohort");
  double oldest = 0.0;
  for (const auto& s : cohort) oldest = std::max(oldest, s.death_age());
  const int top = std::min(cfg.max_table_age, static_cast<int>(std::floor(oldest)));
  if (top < static_cast<int>(std::floor(oldest))) {
    logger().info("derived tables truncated at age {} (oldest death {:.1f})", top, oldest);
  }
  const std::size_t bins = static_cast<std::size_t>(top) + 1;
  auto bin = [&](double age) { return static_cast<std::size_t>(std::floor(age)); };

  struct Counts {
    int n = 0;
    std::vector<double> deaths, exits, diagnoses, exit_fraction;
  };
  Counts by_sex[2];
  for (auto& c : by_sex) {
    c.deaths.assign(bins, 0.0);
    c.exits.assign(bins, 0.0);
    c.diagnoses.assign(bins, 0.0);
    c.exit_fraction.assign(bins, 0.0);
  }
  for (const auto& s : cohort) {
    Counts& c = by_sex[s.gender];
    ++c.n;
    if (auto b = bin(s.death_age()); b < bins) c.deaths[b] += 1.0;
    const double exit = s.diagnosed() ? s.t_d : s.t_p;
    if (auto b = bin(exit); b < bins) {
      c.exits[b] += 1.0;
      c.exit_fraction[b] += exit - static_cast<double>(b);
      if (s.diagnosed()) c.diagnoses[b] += 1.0;
    }
  }

  std::vector<LexisGrid::Cell> q_cells;
  CountTable diagnoses, person_years;
  for (int g = 0; g < 2; ++g) {
    const Counts& c = by_sex[g];
    double alive = c.n, cancer_free = c.n;
    for (int a = 0; a <= top; ++a) {
      const double q = alive > 0.0 ? c.deaths[a] / alive : 1.0;
      double py = cfg.person_years == PersonYears::kMidYear
                      ? cancer_free - 0.5 * c.exits[a]
                      : cancer_free - c.exits[a] + c.exit_fraction[a];
      for (int y = cfg.birth_year; y <= cfg.birth_year + top; ++y) {
        StratumKey key{a, y, {g}};
        q_cells.push_back({key, q});
        if (c.diagnoses[a] > 0.0) diagnoses.emplace(key, c.diagnoses[a]);
        person_years.emplace(key, py);
      }
      alive -= c.deaths[a];
      cancer_free -= c.exits[a];
    }
  }
  DerivedTables out;
  out.life_table = LifeTable::from_cells(q_cells);
  out.incidence = compute_incidence(diagnoses, person_years, diag);
  out.max_age = top;
  return out;
}

std::vector<PatientRecord> registered_cases(std::span<const SubjectHistory> cohort,
                                            const ScenarioConfig& cfg, std::uint64_t censor_seed) {
  std::mt19937_64 rng(censor_seed);
  std::uniform_real_distribution<double> censor(0.0, cfg.censor_max);
  std::vector<PatientRecord> out;
  for (const auto& s : cohort) {
    if (!s.diagnosed()) continue;
    const double c = censor(rng);
    out.push_back(to_record(s, cfg, std::min(s.t_do, c), s.t_do <= c));
  }
  return out;
}

std::vector<PatientRecord> select_window(std::span<const PatientRecord> cases,
                                         const ScenarioConfig& cfg) {
  std::vector<PatientRecord> out;
  for (const auto& r : cases) {
    if (r.age_diag >= cfg.window_min && r.age_diag < cfg.window_max) out.push_back(r);
  }
  return out;
}

std::vector<PatientRecord> make_registry(std::span<const SubjectHistory> cohort,
                                         const ScenarioConfig& cfg, std::uint64_t censor_seed) {
  return select_window(registered_cases(cohort, cfg, censor_seed), cfg);
}

std::vector<PatientRecord> full_registry(std::span<const SubjectHistory> cohort,
                                         const ScenarioConfig& cfg) {
  std::vector<PatientRecord> out;
  for (const auto& s : cohort) {
    if (s.diagnosed()) out.push_back(to_record(s, cfg, s.t_do, true));
  }
  return out;
}

std::vector<double> true_net_survival(const ScenarioConfig& cfg, std::span<const double> years) {
  using CacheKey = std::tuple<int, int, std::uint64_t, double, double, int>;
  static std::mutex mutex;
  static std::map<CacheKey, std::vector<double>> cache;  // excess hazards of window cases

  const CacheKey key{cfg.dataset, cfg.truth_size, cfg.seed, cfg.window_min, cfg.window_max,
                     cfg.birth_year};
  std::vector<double> hazards;
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) hazards = it->second;
  }
  if (hazards.empty()) {
    ScenarioConfig big = cfg;
    big.cohort_size = cfg.truth_size;
    for (const auto& s : generate_cohort(big, cfg.seed + kTruthOffset)) {
      if (in_window(s, cfg)) hazards.push_back(excess_hazard(s.t_d, cfg.birth_year + s.t_d, s.gender));
    }
    if (hazards.empty()) throw Error(ErrorCode::kEmptyInput, "truth cohort has no window cases");
    std::lock_guard<std::mutex> lock(mutex);
    cache.emplace(key, hazards);
  }
  std::vector<double> out;
  for (double t : years) {
    double sum = 0.0;
    for (double h : hazards) sum += std::exp(-h * t);
    out.push_back(sum / static_cast<double>(hazards.size()));
  }
  return out;
}

ReplicateResult run_replicate(const ScenarioConfig& cfg, int replicate) {
  ReplicateResult res;
  try {
    const auto r = static_cast<std::uint64_t>(replicate);
    auto cohort = generate_cohort(cfg, cfg.seed + r);
    Diagnostics& diag = res.diagnostics;
    auto tables = derive_tables(cohort, cfg, &diag);
    auto cases = registered_cases(cohort, cfg, cfg.seed + kCensorOffset + r);
    auto registry = select_window(cases, cfg);
    if (registry.empty()) throw Error(ErrorCode::kEmptyInput, "no registry cases");
    res.patients = static_cast<int>(registry.size());
    res.events = static_cast<int>(
        std::count_if(registry.begin(), registry.end(), [](const auto& p) { return p.event; }));

    AdjustmentConfig acfg;
    acfg.horizon = cfg.horizon;
    acfg.extrapolation.points = cfg.extrapolation_points;
    acfg.within_year = cfg.within_year;
    acfg.normalize_prevalence = cfg.normalize_prevalence;
    auto keys = record_keys(registry);
    RegistryOverallSurvival overall(
        build_strata(cfg.survival_source == SurvivalSource::kAllAges ? cases : registry, Banding{},
                     &diag),
        acfg.extrapolation, &diag);
    auto adjustment =
        adjust_population_survival(keys, tables.life_table, tables.incidence, overall, acfg, &diag);

    const int span = std::max(cfg.horizon, follow_up_horizon(registry));
    auto naive = make_naive_provider(tables.life_table, keys, span, &diag);
    auto adjusted = adjusted_survival_provider(adjustment, keys);
    EstimatorOptions opts;
    opts.report_years = cfg.years;
    auto pp_naive = pohar_perme(registry, naive, opts, &diag);
    auto pp_adjusted = pohar_perme(registry, adjusted, opts, &diag);
    for (const auto& yv : evaluate_at_years(pp_naive.survival, cfg.years)) res.naive.push_back(yv.value);
    for (const auto& yv : evaluate_at_years(pp_adjusted.survival, cfg.years)) {
      res.adjusted.push_back(yv.value);
    }
    res.ok = true;
  } catch (const Error& e) {
    res.ok = false;
    res.error = e.what();
  }
  return res;
}

namespace {

CountSummary summarize_counts(std::vector<int> v) {
  CountSummary s;
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  s.median = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  s.min = v.front();
  s.max = v.back();
  return s;
}

}  // namespace

ExperimentResult run_experiment(const ScenarioConfig& cfg) {
  validate(cfg);
  const auto truth = true_net_survival(cfg, cfg.years);

  ExperimentResult out;
  out.dataset = cfg.dataset;
  out.reps = cfg.reps;
  out.replicates.resize(static_cast<std::size_t>(cfg.reps));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < cfg.reps; r = next++) out.replicates[r] = run_replicate(cfg, r);
  };
  const int jobs = std::min(cfg.jobs, cfg.reps);
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<int> patients, events;
  std::vector<const ReplicateResult*> kept;
  for (int r = 0; r < cfg.reps; ++r) {
    const auto& rep = out.replicates[r];
    out.diagnostics.merge(rep.diagnostics);
    if (!rep.ok) {
      logger().warn("replicate {} excluded: {}", r, rep.error);
      ++out.excluded;
      continue;
    }
    kept.push_back(&rep);
    patients.push_back(rep.patients);
    events.push_back(rep.events);
  }
  out.diagnostics.excluded_replicates = static_cast<std::uint64_t>(out.excluded);
  out.patients = summarize_counts(patients);
  out.events = summarize_counts(events);

  const std::pair<const char*, std::vector<double> ReplicateResult::*> methods[] = {
      {"naive_pp", &ReplicateResult::naive}, {"adjusted_pp", &ReplicateResult::adjusted}};
  for (std::size_t y = 0; y < cfg.years.size(); ++y) {
    for (const auto& [name, member] : methods) {
      MethodSummary row;
      row.method = name;
      row.year = cfg.years[y];
      row.truth = truth[y];
      if (!kept.empty()) {
        double sum = 0.0, sq = 0.0;
        for (const auto* rep : kept) {
          const double v = (rep->*member)[y];
          sum += v;
          sq += (v - row.truth) * (v - row.truth);
        }
        const double n = static_cast<double>(kept.size());
        row.mean = sum / n;
        row.pct_bias = 100.0 * (row.mean - row.truth) / row.truth;
        row.rmse = std::sqrt(sq / n);
      } else {
        row.mean = row.pct_bias = row.rmse = std::nan("");
      }
      out.rows.push_back(row);
    }
  }
  return out;
}

void write_table1(std::ostream& out, const ExperimentResult& result) {
  out << "dataset,reps,excluded,patients_median,patients_min,patients_max,events_median,events_min,"
         "events_max\n";
  out << result.dataset << ',' << result.reps << ',' << result.excluded << ','
      << csv::format_double(result.patients.median) << ',' << result.patients.min << ','
      << result.patients.max << ',' << csv::format_double(result.events.median) << ','
      << result.events.min << ',' << result.events.max << '\n';
}

void write_table2(std::ostream& out, const ExperimentResult& result) {
  out << "dataset,year,true,method,mean,pct_bias,rmse_x100\n";
  for (const auto& r : result.rows) {
    out << result.dataset << ',' << csv::format_double(r.year) << ','
        << csv::format_double(r.truth) << ',' << r.method << ',' << csv::format_double(r.mean) << ','
        << csv::format_double(r.pct_bias) << ',' << csv::format_double(100.0 * r.rmse) << '\n';
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  std::istringstream in(value);
  in >> out;
  if (!in || !in.eof()) {
    throw Error(ErrorCode::kSchema, "scenario: bad value for " + key + ": '" + value + "'");
  }
  return out;
}

}  // namespace

ScenarioConfig read_scenario(std::istream& in, ScenarioConfig cfg) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kSchema, "scenario:" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "dataset") cfg.dataset = parse_number<int>(key, value);
    else if (key == "cohort_size") cfg.cohort_size = parse_number<int>(key, value);
    else if (key == "reps") cfg.reps = parse_number<int>(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "horizon") cfg.horizon = parse_number<int>(key, value);
    else if (key == "extrapolation_points") cfg.extrapolation_points = parse_number<int>(key, value);
    else if (key == "jobs") cfg.jobs = parse_number<int>(key, value);
    else if (key == "truth_size") cfg.truth_size = parse_number<int>(key, value);
    else if (key == "max_table_age") cfg.max_table_age = parse_number<int>(key, value);
    else if (key == "person_years") {
      if (value == "mid") cfg.person_years = PersonYears::kMidYear;
      else if (value == "exact") cfg.person_years = PersonYears::kExact;
      else throw Error(ErrorCode::kSchema, "scenario: person_years must be mid or exact");
    } else if (key == "survival_source") {
      if (value == "all") cfg.survival_source = SurvivalSource::kAllAges;
      else if (value == "window") cfg.survival_source = SurvivalSource::kWindow;
      else throw Error(ErrorCode::kSchema, "scenario: survival_source must be all or window");
    } else if (key == "within_year") {
      if (value == "start") cfg.within_year = WithinYearApprox::kYearStart;
      else if (value == "mid") cfg.within_year = WithinYearApprox::kMidYear;
      else throw Error(ErrorCode::kSchema, "scenario: within_year must be start or mid");
    } else if (key == "normalize_prevalence") {
      if (value == "true" || value == "1") cfg.normalize_prevalence = true;
      else if (value == "false" || value == "0") cfg.normalize_prevalence = false;
      else throw Error(ErrorCode::kSchema, "scenario: normalize_prevalence must be true or false");
    } else if (key == "years") {
      cfg.years.clear();
      std::istringstream list(value);
      std::string item;
      while (std::getline(list, item, ',')) cfg.years.push_back(parse_number<double>(key, trim(item)));
    } else {
      throw Error(ErrorCode::kSchema,
                  "scenario:" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path, ScenarioConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open scenario file " + path);
  return read_scenario(in, std::move(base));
}

}  // namespace netadjust::sim
