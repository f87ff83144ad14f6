#ifndef QUBRAIN_H
#define QUBRAIN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum QbStatus {
  QB_STATUS_OK = 0,
  QB_STATUS_NULL_POINTER = 1,
  QB_STATUS_INVALID_UTF8 = 2,
  QB_STATUS_UNKNOWN_MODEL = 3,
  QB_STATUS_DIMENSION = 4,
  QB_STATUS_DOMAIN = 5,
  QB_STATUS_NORMALIZATION = 6,
  QB_STATUS_UNDEFINED_METRIC = 7,
  QB_STATUS_INCOMPATIBLE = 8,
  QB_STATUS_CORRUPT = 9,
  QB_STATUS_IO = 10,
  QB_STATUS_CONFIG = 11,
  QB_STATUS_OTHER = 12,
  QB_STATUS_PANIC = 13,
} QbStatus;

/**
 * Opaque handle to a model and its parameters.
 */
typedef struct QbModel QbModel;

/**
 * Confusion counts and the derived rates at the 0.5 threshold.
 */
typedef struct QbPrf1 {
  uint64_t true_pos;
  uint64_t true_neg;
  uint64_t false_pos;
  uint64_t false_neg;
  double precision;
  double recall;
  double f1;
} QbPrf1;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *qb_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *qb_version(void);

/**
 * Builds model `model_id` with parameters drawn from `seed`.
 *
 * # Safety
 * `model_id` must be a nul-terminated string and `out` a valid pointer.
 */
enum QbStatus qb_model_new(const char *model_id, uint64_t seed, struct QbModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void qb_model_free(struct QbModel *model);

/**
 * Number of scalar parameters of `model`.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum QbStatus qb_model_param_count(const struct QbModel *model, size_t *out);

/**
 * Expected parameter count of architecture `model_id`.
 *
 * # Safety
 * `model_id` must be a nul-terminated string and `out` a valid pointer.
 */
enum QbStatus qb_expected_param_count(const char *model_id, size_t *out);

/**
 * Positive-class scores for `rows` row-major feature rows of width `cols`,
 * written to `scores[0..rows]`. Features must already be preprocessed.
 *
 * # Safety
 * `features` must hold `rows * cols` values and `scores` room for `rows`.
 */
enum QbStatus qb_model_predict(const struct QbModel *model,
                               const double *features,
                               size_t rows,
                               size_t cols,
                               double *scores);

/**
 * Writes a checkpoint of `model` to `path`, tagged with `seed` and `epoch`.
 *
 * # Safety
 * `model` must be valid and `path` a nul-terminated string.
 */
enum QbStatus qb_model_save(const struct QbModel *model,
                            const char *path,
                            uint64_t seed,
                            size_t epoch);

/**
 * Reads a checkpoint and builds the model it holds. `*out` is untouched on failure.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum QbStatus qb_model_load(const char *path, struct QbModel **out);

/**
 * Loads a checkpoint into an existing model of the same architecture.
 *
 * # Safety
 * `model` must be valid and `path` a nul-terminated string.
 */
enum QbStatus qb_model_restore(struct QbModel *model, const char *path);

/**
 * Rank-based ROC AUC of `n` scores against 0/1 labels.
 *
 * # Safety
 * `scores` and `labels` must hold `n` values; `out` must be valid.
 */
enum QbStatus qb_roc_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Confusion counts, precision, recall and F1 of `n` scores at threshold 0.5.
 *
 * # Safety
 * `scores` and `labels` must hold `n` values; `out` must be valid.
 */
enum QbStatus qb_prf1(const double *scores, const uint8_t *labels, size_t n, struct QbPrf1 *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUBRAIN_H */
