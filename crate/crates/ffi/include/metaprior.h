#ifndef METAPRIOR_H
#define METAPRIOR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum MpStatus {
  MP_STATUS_OK = 0,
  MP_STATUS_NULL_POINTER = 1,
  MP_STATUS_INVALID_UTF8 = 2,
  MP_STATUS_OUT_OF_RANGE = 3,
  MP_STATUS_DOMAIN = 4,
  MP_STATUS_CONFIG = 5,
  MP_STATUS_PARSE = 6,
  MP_STATUS_UNKNOWN_COLUMN = 7,
  MP_STATUS_INVARIANT_VIOLATION = 8,
  MP_STATUS_POWER_RULE = 9,
  MP_STATUS_SINGULAR_DESIGN = 10,
  MP_STATUS_NUMERICAL = 11,
  MP_STATUS_IO = 12,
  MP_STATUS_PANIC = 13,
} MpStatus;

typedef enum MpDelimiter {
  MP_DELIMITER_WHITESPACE = 0,
  MP_DELIMITER_COMMA = 1,
} MpDelimiter;

typedef enum MpModel {
  MP_MODEL_FIXED = 0,
  MP_MODEL_RANDOM = 1,
  MP_MODEL_REGRESSION = 2,
} MpModel;

/**
 * A completed analysis.
 */
typedef struct MpAnalysis MpAnalysis;

/**
 * A parsed data file.
 */
typedef struct MpDataset MpDataset;

/**
 * One row of the result's parameter table. The name is fetched separately
 * with `mp_analysis_parameter_name`.
 */
typedef struct MpParameter {
  enum MpModel model;
  double mean;
  double sd;
  double ci_low;
  double ci_high;
  bool significant;
} MpParameter;

typedef struct MpDic {
  double dic;
  double d_bar;
  double d_hat;
  double p_d;
} MpDic;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *mp_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mp_version(void);

/**
 * Fisher z of a correlation strictly inside (-1, 1).
 *
 * # Safety
 * `out` must be a valid pointer to a double.
 */
enum MpStatus mp_fisher_z(double r, double *out);

/**
 * Back-transform of a Fisher z value; the result lies strictly inside (-1, 1).
 */
double mp_inv_fisher_z(double z);

/**
 * Sampling variance `1 / (n - 3)` of z for sample size `n >= 4`.
 *
 * # Safety
 * `out` must be a valid pointer to a double.
 */
enum MpStatus mp_z_variance(uint64_t n, double *out);

/**
 * Closed-form fixed-effects posterior of `m` studies under the prior
 * N(`prior_mean`, `prior_var`).
 *
 * # Safety
 * `z`, `phi` and `alpha` must each point to `m` doubles (they may be null when
 * `m` is 0); `out_mean` and `out_var` must be valid pointers.
 */
enum MpStatus mp_combine_studies(double prior_mean,
                                 double prior_var,
                                 const double *z,
                                 const double *phi,
                                 const double *alpha,
                                 size_t m,
                                 double *out_mean,
                                 double *out_var);

/**
 * Parses a data file held in memory.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MpStatus mp_dataset_parse(const char *text,
                               enum MpDelimiter delimiter,
                               struct MpDataset **out);

/**
 * Number of data rows, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be null or a live handle from `mp_dataset_parse`.
 */
size_t mp_dataset_rows(const struct MpDataset *dataset);

/**
 * Number of columns, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be null or a live handle from `mp_dataset_parse`.
 */
size_t mp_dataset_columns(const struct MpDataset *dataset);

/**
 * # Safety
 * `dataset` must be null or a handle from `mp_dataset_parse` not yet freed.
 */
void mp_dataset_free(struct MpDataset *dataset);

/**
 * Runs the analysis described by `config_json` (the same object the service
 * accepts under `config`, with fields named after the command-line flags).
 *
 * # Safety
 * `dataset` must be a live handle, `config_json` a NUL-terminated string and
 * `out` a valid pointer.
 */
enum MpStatus mp_analysis_run(const struct MpDataset *dataset,
                              const char *config_json,
                              struct MpAnalysis **out);

/**
 * Rows in the result's parameter table, or 0 for a null handle.
 *
 * # Safety
 * `analysis` must be null or a live handle.
 */
size_t mp_analysis_parameter_count(const struct MpAnalysis *analysis);

/**
 * # Safety
 * `analysis` must be a live handle and `out` a valid pointer.
 */
enum MpStatus mp_analysis_parameter(const struct MpAnalysis *analysis,
                                    size_t index,
                                    struct MpParameter *out);

/**
 * Name of parameter `index`, owned by the handle; null when out of range.
 *
 * # Safety
 * `analysis` must be null or a live handle.
 */
const char *mp_analysis_parameter_name(const struct MpAnalysis *analysis, size_t index);

/**
 * DIC of one fitted model.
 *
 * # Safety
 * `analysis` must be a live handle and `out` a valid pointer.
 */
enum MpStatus mp_analysis_dic(const struct MpAnalysis *analysis,
                              enum MpModel model,
                              struct MpDic *out);

/**
 * The result document as JSON; release with `mp_string_free`. Null for a
 * null handle.
 *
 * # Safety
 * `analysis` must be null or a live handle.
 */
char *mp_analysis_to_json(const struct MpAnalysis *analysis);

/**
 * # Safety
 * `analysis` must be null or a handle from `mp_analysis_run` not yet freed.
 */
void mp_analysis_free(struct MpAnalysis *analysis);

/**
 * One-shot analysis: data text and configuration in, result document out.
 *
 * # Safety
 * `text` and `config_json` must be NUL-terminated strings and `out_json` a
 * valid pointer. The string stored in `*out_json` is released with
 * `mp_string_free`.
 */
enum MpStatus mp_analyze_json(const char *text,
                              enum MpDelimiter delimiter,
                              const char *config_json,
                              char **out_json);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void mp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* METAPRIOR_H */
