#ifndef NETADJUST_H
#define NETADJUST_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(NETADJUST_BUILDING)
#    define NA_API __declspec(dllexport)
#  else
#    define NA_API __declspec(dllimport)
#  endif
#else
#  define NA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Same numbering as netadjust::ErrorCode. */
typedef enum na_status {
  NA_OK = 0,
  NA_ERR_INVALID_ARGUMENT = 1,
  NA_ERR_EMPTY_INPUT = 2,
  NA_ERR_SCHEMA = 3,
  NA_ERR_MISSING_CELL = 4,
  NA_ERR_OUT_OF_RANGE = 5,
  NA_ERR_DUPLICATE_KEY = 6,
  NA_ERR_INFINITE_HAZARD = 7,
  NA_ERR_INCONSISTENT_INPUTS = 8,
  NA_ERR_EXTRAPOLATION = 9,
  NA_ERR_IO = 10,
  NA_ERR_INTERNAL = 11
} na_status;

typedef struct na_registry na_registry;
typedef struct na_lifetable na_lifetable;
typedef struct na_incidence na_incidence;
typedef struct na_adjustment na_adjustment;
typedef struct na_provider na_provider;

/* Calls taking an na_diagnostics* add their counters to it; NULL is allowed.
   Zero-initialise before the first call. */
typedef struct na_diagnostics {
  uint64_t lifetable_clamps;
  uint64_t incidence_clamps;
  uint64_t stratum_clamps;
  uint64_t stratum_merges;
  uint64_t missing_incidence_cells;
  uint64_t incidence_clips;
  uint64_t extrapolation_fallbacks;
  uint64_t negative_slope_clips;
  uint64_t interpolation_zero_endpoints;
  uint64_t sp_clips;
  uint64_t monotonicity_guards;
  uint64_t sp_below_lifetable;
  uint64_t weight_caps;
  uint64_t empty_risk_sets;
  uint64_t excluded_replicates;
} na_diagnostics;

/* Counter names in field order; `index` past the end yields NULL. */
NA_API const char* na_diagnostics_name(size_t index);
NA_API uint64_t na_diagnostics_value(const na_diagnostics* diag, size_t index);

NA_API const char* na_version(void);
NA_API const char* na_status_name(na_status status);
/* Message of the last failed call on this thread; "" after a success. */
NA_API const char* na_last_error(void);

/* Lower-case hex SHA-256 of a file, written to out[0..64]. */
NA_API na_status na_sha256_file(const char* path, char out[65]);

/* Registry: age_diag,year_diag,sex,time,event */
NA_API na_status na_registry_load(const char* path, na_registry** out);
NA_API na_status na_registry_from_arrays(size_t n, const int* age, const int* year, const int* sex,
                                         const double* time, const int* event, na_registry** out);
NA_API size_t na_registry_size(const na_registry* registry);
/* Smallest integer horizon covering every follow-up time. */
NA_API int na_registry_follow_up(const na_registry* registry);
NA_API void na_registry_free(na_registry* registry);

/* Life table: age,year,sex,q */
NA_API na_status na_lifetable_load(const char* path, na_lifetable** out);
NA_API na_status na_lifetable_from_arrays(size_t n, const int* age, const int* year, const int* sex,
                                          const double* q, na_lifetable** out);
NA_API void na_lifetable_free(na_lifetable* table);

/* Incidence: age,year,sex,ir; or diagnoses (age,year,sex,count) over
   person-years (age,year,sex,person_years). */
NA_API na_status na_incidence_load(const char* path, na_incidence** out, na_diagnostics* diag);
NA_API na_status na_incidence_from_counts(const char* diagnoses_path, const char* person_years_path,
                                          na_incidence** out, na_diagnostics* diag);
NA_API na_status na_incidence_from_arrays(size_t n, const int* age, const int* year, const int* sex,
                                          const double* ir, na_incidence** out);
NA_API void na_incidence_free(na_incidence* table);

typedef struct na_adjust_options {
  int horizon;                /* K */
  int extrapolation_points;   /* H */
  int min_at_risk;            /* risk-set floor for the end of follow-up */
  int min_stratum_size;       /* registry strata below this are merged */
  int within_year_mid;        /* 1 (default): mid-year, 0: year start */
  int prevalent_unconditional;
  int normalize_prevalence;
} na_adjust_options;

NA_API void na_adjust_options_default(na_adjust_options* options);

NA_API na_status na_adjust(const na_registry* registry, const na_lifetable* lifetable,
                           const na_incidence* incidence, const na_adjust_options* options,
                           na_adjustment** out, na_diagnostics* diag);
/* Ŝ_P(t) for a key of the registry the adjustment was built from. */
NA_API na_status na_adjustment_survival(const na_adjustment* adjustment, int age, int year, int sex,
                                        double t, double* out);
NA_API na_status na_adjustment_alpha(const na_adjustment* adjustment, int age, int year, int sex,
                                     double* out);
/* age,year,sex,t,s_p,lifetable,alpha,r */
NA_API na_status na_adjustment_write_csv(const na_adjustment* adjustment, const char* path);
NA_API void na_adjustment_free(na_adjustment* adjustment);

/* Population-survival source for the estimators. `horizon` bounds the naive
   grid from below; the registry's follow-up extends it as needed. */
NA_API na_status na_provider_naive(const na_lifetable* lifetable, const na_registry* registry,
                                   int horizon, na_provider** out, na_diagnostics* diag);
NA_API na_status na_provider_adjusted(const na_adjustment* adjustment, na_provider** out);
NA_API na_status na_provider_unit(na_provider** out);
NA_API const char* na_provider_name(const na_provider* provider);
NA_API void na_provider_free(na_provider* provider);

typedef enum na_estimator {
  NA_POHAR_PERME = 0,
  NA_EDERER1 = 1,
  NA_CRUDE_PROBABILITY = 2
} na_estimator;

/* Pohar-Perme and Ederer I report survival, crude probability reports the
   isotonic cumulative probability. */
NA_API na_status na_estimate(const na_registry* registry, const na_provider* provider,
                             na_estimator estimator, const double* years, size_t n_years,
                             double* values, na_diagnostics* diag);
/* estimator,provider,year,value for all three estimators. */
NA_API na_status na_estimate_write_csv(const na_registry* registry, const na_provider* provider,
                                       const double* years, size_t n_years, const char* path,
                                       na_diagnostics* diag);
/* t,lambda,e_s of the Pohar-Perme estimate. */
NA_API na_status na_curve_write_csv(const na_registry* registry, const na_provider* provider,
                                    const char* path, na_diagnostics* diag);

typedef struct na_simulation_config {
  int dataset;
  int cohort_size;
  int reps;
  uint64_t seed;
  int horizon;
  int extrapolation_points;
  int jobs;
  int truth_size;
  int max_table_age;
  int person_years_exact;      /* 0: mid-year person-years */
  int survival_window_only;    /* 0: registry curves from every diagnosis age */
  int within_year_mid;
  int normalize_prevalence;
  size_t n_years;
  double years[16];
} na_simulation_config;

NA_API void na_simulation_config_default(na_simulation_config* config);
/* Overlays the keys present in a scenario file onto `config`. */
NA_API na_status na_simulation_config_load(const char* path, na_simulation_config* config);

typedef struct na_simulation_summary {
  int reps;
  int excluded;
  double patients_median;
  double events_median;
} na_simulation_summary;

/* Runs the experiment and writes the two summary tables. */
NA_API na_status na_simulate(const na_simulation_config* config, const char* table1_path,
                             const char* table2_path, na_simulation_summary* summary,
                             na_diagnostics* diag);

#ifdef __cplusplus
}
#endif

#endif
