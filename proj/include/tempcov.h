/* tempcov — time-varying covariance estimation for high-dimensional
 * multivariate time series.
 *
 * C API over the fitting engine, synthetic benchmark generators, and
 * evaluation metrics.  All functions returning tc_status set a thread-local
 * error message readable via tc_last_error() on failure.  Strings returned
 * through char** out-parameters are heap-allocated; release them with
 * tc_string_free().  Handles are released with their matching *_free().
 *
 * Period, boundary, variable, and cluster indices are 1-based at this
 * interface.
 */
#ifndef TEMPCOV_H
#define TEMPCOV_H

#include <stddef.h>
#include <stdint.h>

#if defined(__GNUC__) && !defined(_WIN32)
#define TEMPCOV_API __attribute__((visibility("default")))
#else
#define TEMPCOV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tc_status {
  TC_OK = 0,
  TC_ERROR_INVALID_ARGUMENT = 1, /* bad parameters or malformed requests */
  TC_ERROR_DATA = 2,             /* I/O, corrupt files, shape mismatches */
  TC_ERROR_NUMERICAL = 3         /* divergence, non-PD estimates */
} tc_status;

/* Raw per-period sample blocks. */
typedef struct tc_dataset tc_dataset;
/* A fitted (or ground-truth reference) model. */
typedef struct tc_model tc_model;
/* A synthetic benchmark instance with splits, truths, and labels. */
typedef struct tc_scenario tc_scenario;

typedef struct tc_fit_options {
  int32_t m;                    /* number of latent factors */
  double lambda;                /* temporal penalty strength */
  double beta;                  /* sample-weight decay in (0, 1) */
  int32_t phi;                  /* 0 = l1 penalty, 1 = l2 penalty */
  int32_t steps_per_round;      /* optimizer steps per annealing round */
  int32_t init_steps_per_round; /* budget of the pooled initialization */
  double learning_rate;
  uint64_t seed;
  int32_t threads; /* 0 = TEMPCOV_THREADS env or hardware default */
} tc_fit_options;

TEMPCOV_API const char* tc_version(void);

/* Message of the calling thread's most recent failure.  Owned by the
 * library; valid until the next failing call on the same thread. */
TEMPCOV_API const char* tc_last_error(void);

TEMPCOV_API void tc_string_free(char* s);

/* Fills defaults: m=8, lambda=0, beta=0.5, phi=l1, 500/250 steps,
 * lr=1e-3, seed=0, threads=0. */
TEMPCOV_API void tc_fit_options_init(tc_fit_options* opts);

/* ---- datasets ------------------------------------------------------- */

/* Reads a header-bearing CSV (rows = samples, columns = variables) and
 * windows it into floor(n/window) periods of exactly `window` rows; the
 * remainder is dropped.  window > n is an error. */
TEMPCOV_API tc_status tc_dataset_from_csv(const char* path, int64_t window,
                                          tc_dataset** out);
TEMPCOV_API void tc_dataset_free(tc_dataset* dataset);
TEMPCOV_API int64_t tc_dataset_num_periods(const tc_dataset* dataset);
TEMPCOV_API int64_t tc_dataset_num_variables(const tc_dataset* dataset);

/* ---- synthetic scenarios -------------------------------------------- */

/* kind is "sudden" or "smooth"; s = training samples per period (validation
 * and test are fixed at 16 and 1000 per period). */
TEMPCOV_API tc_status tc_scenario_generate(const char* kind, int32_t p,
                                           int32_t m, int32_t s, int32_t T,
                                           uint64_t seed, tc_scenario** out);
TEMPCOV_API tc_status tc_scenario_write(const tc_scenario* scenario,
                                        const char* dir);
TEMPCOV_API tc_status tc_scenario_read(const char* dir, tc_scenario** out);
/* split is "train", "val", or "test". */
TEMPCOV_API tc_status tc_scenario_split(const tc_scenario* scenario,
                                        const char* split, tc_dataset** out);
/* The exact generating covariances packaged as a reference model, usable
 * everywhere a fitted model is. */
TEMPCOV_API tc_status tc_scenario_truth_model(const tc_scenario* scenario,
                                              tc_model** out);
TEMPCOV_API void tc_scenario_free(tc_scenario* scenario);

/* ---- fitting --------------------------------------------------------- */

TEMPCOV_API tc_status tc_fit(const tc_dataset* dataset,
                             const tc_fit_options* opts, tc_model** out);
/* Also returns the per-step objective log as JSON. */
TEMPCOV_API tc_status tc_fit_logged(const tc_dataset* dataset,
                                    const tc_fit_options* opts,
                                    tc_model** out, char** log_json);

/* ---- models ---------------------------------------------------------- */

TEMPCOV_API tc_status tc_model_save(const tc_model* model, const char* path);
TEMPCOV_API tc_status tc_model_load(const char* path, tc_model** out);
TEMPCOV_API void tc_model_free(tc_model* model);
TEMPCOV_API int64_t tc_model_num_periods(const tc_model* model);
TEMPCOV_API int64_t tc_model_num_variables(const tc_model* model);
TEMPCOV_API int64_t tc_model_num_factors(const tc_model* model);
/* labels_out must hold p entries; labels are cluster indices in 1..m. */
TEMPCOV_API tc_status tc_model_clusters(const tc_model* model, int64_t period,
                                        int32_t* labels_out);

/* ---- evaluation ------------------------------------------------------ */

/* NLL always; ARI when a scenario with ground-truth labels is supplied;
 * change-point scores when with_changepoints is nonzero.  Returns the
 * report as JSON. */
TEMPCOV_API tc_status tc_evaluate(const tc_model* model,
                                  const tc_dataset* test,
                                  const tc_scenario* truth_or_null,
                                  int32_t with_changepoints,
                                  char** report_json);
/* scores_out must hold T-1 entries (boundary t|t+1 at index t-1). */
TEMPCOV_API tc_status tc_changepoint_scores(const tc_model* model,
                                            double* scores_out);
/* The k variables whose precision rows change most across boundary
 * `boundary` (1-based, between periods boundary and boundary+1); vars_out
 * must hold k entries, filled with 1-based variable indices. */
TEMPCOV_API tc_status tc_top_changed_variables(const tc_model* model,
                                               int64_t boundary, int32_t k,
                                               int32_t* vars_out);

/* ---- grid search ----------------------------------------------------- */

/* grid_json_or_null: {"lambda": [..], "beta": [..], "m": [..],
 * "phi": ["l1"|"l2", ..]} — each key optional, defaults to the published
 * grid for the scenario's kind.  Fits every cell on train, selects by
 * validation NLL, reports the winner's test NLL; leaderboard as JSON. */
TEMPCOV_API tc_status tc_grid_search(const tc_scenario* scenario,
                                     const char* grid_json_or_null,
                                     const tc_fit_options* base,
                                     tc_model** best_model,
                                     char** leaderboard_json);

/* ---- scaling benchmark ----------------------------------------------- */

/* Times full optimizer steps at each p and fits a log-log slope; emits a
 * whitespace-separated table.  table_text and slope_out may be NULL. */
TEMPCOV_API tc_status tc_benchmark_scaling(const int64_t* ps, size_t num_ps,
                                           int32_t m, int32_t T,
                                           int32_t samples_per_period,
                                           int32_t steps, uint64_t seed,
                                           char** table_text,
                                           double* slope_out);

#ifdef __cplusplus
}
#endif

#endif /* TEMPCOV_H */
