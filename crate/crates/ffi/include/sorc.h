#ifndef SORC_H
#define SORC_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SorcStatus {
  SORC_STATUS_OK = 0,
  SORC_STATUS_NULL_POINTER = 1,
  SORC_STATUS_INVALID_ARGUMENT = 2,
  SORC_STATUS_IO = 3,
  SORC_STATUS_FORMAT = 4,
  SORC_STATUS_COMPUTE = 5,
  SORC_STATUS_BUFFER_TOO_SMALL = 6,
  SORC_STATUS_PANIC = 7,
} SorcStatus;

/**
 * Pairwise channel similarity matrix.
 */
typedef struct SorcMatrix SorcMatrix;

/**
 * Mass channel stack.
 */
typedef struct SorcStack SorcStack;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Valid until the next
 * call on the same thread.
 */
const char *sorc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sorc_version(void);

/**
 * Loads a stack container from `path`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SorcStatus sorc_stack_load(const char *path, struct SorcStack **out);

/**
 * Writes `stack` as a container to `path`.
 *
 * # Safety
 * `stack` must come from this library; `path` must be NUL-terminated.
 */
enum SorcStatus sorc_stack_save(const struct SorcStack *stack, const char *path);

/**
 * Height, width and channel count of `stack`. Null outputs are skipped.
 *
 * # Safety
 * `stack` must come from this library; outputs must be valid or null.
 */
enum SorcStatus sorc_stack_dims(const struct SorcStack *stack,
                                size_t *height,
                                size_t *width,
                                size_t *channels);

/**
 * # Safety
 * `stack` must come from this library or be null; it must not be used
 * afterwards.
 */
void sorc_stack_free(struct SorcStack *stack);

/**
 * Generates a synthetic stack. `regularity` is "high", "medium" or "low".
 * When `labels` is non-null it receives `clusters * per_cluster` 1-based
 * ground-truth labels.
 *
 * # Safety
 * `regularity` must be NUL-terminated, `out` valid, and `labels` null or
 * writable for `clusters * per_cluster` elements.
 */
enum SorcStatus sorc_synthetic(const char *regularity,
                               size_t clusters,
                               size_t per_cluster,
                               double noise,
                               uint64_t seed,
                               size_t size,
                               struct SorcStack **out,
                               size_t *labels);

/**
 * Pre-processes `stack` with the given setup and computes the similarity
 * matrix of `function` (a name such as "pearson" or "mssim") with default
 * parameters. `ms_level` is 0, 1 or 2.
 *
 * # Safety
 * `stack` must come from this library, `function` be NUL-terminated and
 * `out` valid.
 */
enum SorcStatus sorc_similarity_matrix(const struct SorcStack *stack,
                                       bool pp,
                                       uint8_t ms_level,
                                       const char *function,
                                       struct SorcMatrix **out);

/**
 * Number of channels (rows) of `matrix`.
 *
 * # Safety
 * `matrix` must come from this library and `size` be valid.
 */
enum SorcStatus sorc_matrix_size(const struct SorcMatrix *matrix, size_t *size);

/**
 * Copies the normalized similarities, row-major, into `buffer`.
 *
 * # Safety
 * `matrix` must come from this library; `buffer` must be writable for
 * `len` doubles.
 */
enum SorcStatus sorc_matrix_copy_normalized(const struct SorcMatrix *matrix,
                                            double *buffer,
                                            size_t len);

/**
 * Copies the raw similarities, row-major, into `buffer`. Failed pairs are
 * NaN.
 *
 * # Safety
 * As for [`sorc_matrix_copy_normalized`].
 */
enum SorcStatus sorc_matrix_copy_raw(const struct SorcMatrix *matrix, double *buffer, size_t len);

/**
 * # Safety
 * `matrix` must come from this library or be null; it must not be used
 * afterwards.
 */
void sorc_matrix_free(struct SorcMatrix *matrix);

/**
 * Mean ranks of `values` divided by `n`, written to `out`; the best value
 * receives 1.
 *
 * # Safety
 * `values` must be readable and `out` writable for `n` doubles.
 */
enum SorcStatus sorc_normalized_ranks(const double *values,
                                      size_t n,
                                      bool higher_is_better,
                                      double *out);

/**
 * Runs the workflow described by the TOML file at `config_path`.
 * `threads` of 0 keeps the config's value. `exit_code` (optional) receives
 * the command-line exit status: 0 ok, 1 config, 2 input, 3 internal.
 *
 * # Safety
 * `config_path` must be NUL-terminated; `exit_code` valid or null.
 */
enum SorcStatus sorc_run_workflow(const char *config_path, size_t threads, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SORC_H */
