/* smoothboost C API: boosted smooth-transition regression trees with exact
 * analytical partial effects.
 *
 * Conventions:
 *   - Every fallible call returns sb_status; SB_OK is 0. On failure the
 *     out-parameters are left untouched and sb_last_error() (thread-local)
 *     describes what went wrong until the next call on the same thread.
 *   - Handles returned through out-parameters are owned by the caller and
 *     released with the matching *_free function. Strings returned by
 *     accessors stay owned by their handle.
 *   - A `threads` argument of 0 picks a worker count automatically (the
 *     SMOOTHBOOST_THREADS environment variable, then hardware concurrency).
 *     Results are bit-identical at every thread count.
 */
#ifndef SMOOTHBOOST_C_API_H
#define SMOOTHBOOST_C_API_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sb_status {
    SB_OK = 0,
    SB_ERROR_INVALID_ARGUMENT = 1,
    SB_ERROR_IO = 2,
    SB_ERROR_DEGENERATE_DATA = 3,
    SB_ERROR_CORRUPT_MODEL = 4,
    SB_ERROR_UNSUPPORTED_VERSION = 5,
    SB_ERROR_INTERNAL = 6
} sb_status;

/* Message for the most recent failure on this thread ("" after success). */
const char* sb_last_error(void);

/* Library version string, e.g. "1.0.0". */
const char* sb_version(void);

typedef struct sb_dataset sb_dataset;
typedef struct sb_model sb_model;
typedef struct sb_report sb_report;
typedef struct sb_cv_result sb_cv_result;
typedef struct sb_trace sb_trace;

/* ------------------------------------------------------------------------ */
/* Hyperparameters                                                          */
/* ------------------------------------------------------------------------ */

typedef struct sb_hyperparams {
    int trees;                /* boosting iterations, >= 1 */
    int splits;               /* soft splits per tree, >= 1 */
    double gamma_min;         /* transition-speed draw interval, 0 < min <= max */
    double gamma_max;
    double shrinkage;         /* step-size factor in (0, 1] */
    double variable_fraction; /* share of eligible variables tried per split, in (0, 1] */
    int threshold_grid;       /* candidate split locations per variable, >= 1 */
    uint64_t seed;
    int threads;              /* 0 = auto */
} sb_hyperparams;

/* Fill with the library defaults (1000 trees, 4 splits, gamma in [0.5, 5],
 * shrinkage 0.2, variable fraction 2/3, grid 100, seed 42, threads auto). */
void sb_hyperparams_init(sb_hyperparams* params);

/* Range-check without training; SB_ERROR_INVALID_ARGUMENT names the field. */
sb_status sb_hyperparams_validate(const sb_hyperparams* params);

/* ------------------------------------------------------------------------ */
/* Datasets                                                                 */
/* ------------------------------------------------------------------------ */

/* Load a CSV with a header row. `target` selects the response column (NULL
 * or "" loads a prediction-only table). `features`/`n_features` restrict and
 * order the feature columns (NULL selects every non-target column). Rows
 * with missing cells in selected columns are dropped and counted; a
 * non-numeric cell is an error naming the column and line. With
 * encode_binary nonzero, two-valued text columns map to 0/1
 * (lexicographically smaller value first). */
sb_status sb_dataset_read_csv(const char* path, const char* target,
                              const char* const* features, size_t n_features,
                              int encode_binary, sb_dataset** out);

/* Build a dataset from column-major arrays (n_cols pointers to n_rows
 * doubles each). `response` of length n_rows is optional, as is its name. */
sb_status sb_dataset_from_arrays(const char* const* names, size_t n_cols, size_t n_rows,
                                 const double* const* columns, const double* response,
                                 const char* target_name, sb_dataset** out);

size_t sb_dataset_rows(const sb_dataset* data);
size_t sb_dataset_cols(const sb_dataset* data);
size_t sb_dataset_skipped_rows(const sb_dataset* data);
const char* sb_dataset_column_name(const sb_dataset* data, size_t index); /* NULL if out of range */

/* Write the feature columns (plus the response column under its own name,
 * when present) with round-trip-safe floats. */
sb_status sb_dataset_write_csv(const sb_dataset* data, const char* path);

void sb_dataset_free(sb_dataset* data);

/* Simulate a benchmark surface: dgp is "cosine" (y = cos(pi (x1 + x2)) + noise,
 * x1 standard normal, x2 Bernoulli(1/2)) or "cubic" (y = x1^3 + noise, x1
 * standard normal plus a pure-noise dummy x2). Noise is calibrated so the
 * in-sample signal share equals r2. `out_truth`, if non-NULL, receives a
 * table with columns "truth" (the noiseless surface) and "partial_x1" (its
 * exact derivative in x1). */
sb_status sb_simulate(const char* dgp, size_t n, double r2, uint64_t seed,
                      sb_dataset** out_data, sb_dataset** out_truth);

/* ------------------------------------------------------------------------ */
/* Training, prediction, derivatives                                        */
/* ------------------------------------------------------------------------ */

/* Fit a boosting ensemble; `data` must carry a response. `out_report`, if
 * non-NULL, receives the per-iteration RMSE and step-size traces. */
sb_status sb_train(const sb_dataset* data, const sb_hyperparams* params,
                   sb_model** out_model, sb_report** out_report);

sb_status sb_model_save(const sb_model* model, const char* path);
sb_status sb_model_load(const char* path, sb_model** out);
size_t sb_model_num_trees(const sb_model* model);
size_t sb_model_num_features(const sb_model* model);
const char* sb_model_feature_name(const sb_model* model, size_t index); /* NULL if out of range */
const char* sb_model_target_name(const sb_model* model);
void sb_model_free(sb_model* model);

/* Prediction data is matched to the model's features by column name, in any
 * order; a column named like the training target is ignored, any other
 * extra column is an error. `out` receives one value per row. */
sb_status sb_predict(const sb_model* model, const sb_dataset* data, int threads, double* out);

/* Exact analytical partial effect d prediction / d variable at every row. */
sb_status sb_partial(const sb_model* model, const sb_dataset* data, const char* variable,
                     int threads, double* out);

/* Single-point variants; `point` has num_features values in model order. */
sb_status sb_predict_row(const sb_model* model, const double* point, size_t dim, double* out);
sb_status sb_partial_row(const sb_model* model, const double* point, size_t dim,
                         const char* variable, double* out);

/* Write per-row predictions as a one-column CSV. */
sb_status sb_predict_to_csv(const sb_model* model, const sb_dataset* data, int threads,
                            const char* path);

/* Write a per-row table: index, the covariates (model order), the fitted
 * value, and the partial effect of `variable`. */
sb_status sb_partial_to_csv(const sb_model* model, const sb_dataset* data, const char* variable,
                            int threads, const char* path);

/* Max over rows of the relative gap between the analytical partial effect
 * and a central finite difference with the given step. */
sb_status sb_fd_check(const sb_model* model, const sb_dataset* data, const char* variable,
                      double step, int threads, double* out_max_rel_err);

/* ------------------------------------------------------------------------ */
/* Fit reports                                                              */
/* ------------------------------------------------------------------------ */

size_t sb_report_iterations(const sb_report* report);
sb_status sb_report_rmse(const sb_report* report, double* out);  /* iterations values */
sb_status sb_report_rho(const sb_report* report, double* out);
double sb_report_wall_time(const sb_report* report); /* seconds; diagnostic only */
/* CSV with columns iteration,rmse,rho (wall time deliberately excluded so
 * the file is identical at every thread count). */
sb_status sb_report_save_csv(const sb_report* report, const char* path);
void sb_report_free(sb_report* report);

/* ------------------------------------------------------------------------ */
/* Cross-validation                                                         */
/* ------------------------------------------------------------------------ */

/* k-fold comparison of the boosting model against an unconditional-mean
 * baseline and ordinary least squares. Folds are an even random split by
 * params->seed; every model sees the same folds. */
sb_status sb_cv(const sb_dataset* data, const sb_hyperparams* params, int k, sb_cv_result** out);

size_t sb_cv_num_models(const sb_cv_result* result);
const char* sb_cv_model_name(const sb_cv_result* result, size_t index);
sb_status sb_cv_mean_rmse(const sb_cv_result* result, const char* name, double* out);
sb_status sb_cv_relative_rmse(const sb_cv_result* result, const char* name, double* out);
sb_status sb_cv_p_value(const sb_cv_result* result, const char* name, double* out);
size_t sb_cv_num_notes(const sb_cv_result* result);
const char* sb_cv_note(const sb_cv_result* result, size_t index);
/* structured nonzero writes a key-value document instead of CSV. */
sb_status sb_cv_save(const sb_cv_result* result, const char* path, int structured);
void sb_cv_free(sb_cv_result* result);

/* ------------------------------------------------------------------------ */
/* Hyperparameter sweeps                                                    */
/* ------------------------------------------------------------------------ */

/* One fit per sweep value on identical data and seed. `kind` is "shrinkage"
 * or "splits" (values in `a`; `b` ignored) or "gamma" (interval [a[i], b[i]]
 * per value). The trace holds each run's per-iteration RMSE. */
sb_status sb_trace_run(const sb_dataset* data, const sb_hyperparams* params, const char* kind,
                       const double* a, const double* b, size_t n_values, sb_trace** out);

size_t sb_trace_num_runs(const sb_trace* trace);
const char* sb_trace_label(const sb_trace* trace, size_t index);
size_t sb_trace_iterations(const sb_trace* trace);
sb_status sb_trace_rmse(const sb_trace* trace, size_t index, double* out); /* iterations values */
/* CSV with an iteration column plus one RMSE column per run. */
sb_status sb_trace_save_csv(const sb_trace* trace, const char* path);
void sb_trace_free(sb_trace* trace);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SMOOTHBOOST_C_API_H */
