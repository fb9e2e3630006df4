#ifndef MPOST_H
#define MPOST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MpostStatus {
  MPOST_STATUS_OK = 0,
  MPOST_STATUS_USAGE = 2,
  MPOST_STATUS_DATA = 3,
  MPOST_STATUS_MODEL = 4,
  MPOST_STATUS_NUMERICAL = 5,
  MPOST_STATUS_NULL_POINTER = 6,
  MPOST_STATUS_PANIC = 7,
} MpostStatus;

typedef enum MpostMode {
  MPOST_MODE_EXACT = 0,
  MPOST_MODE_TRUNCATED = 1,
  MPOST_MODE_HYBRID = 2,
} MpostMode;

/**
 * Opaque handle to an iid predictive model.
 */
typedef struct MpostModel MpostModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *mpost_last_error_message(void);

/**
 * Creates a model by family name. `nu` is used by student_t, `sigma2` by
 * normal_mean and `dim` by mvnormal (0 means 2); the others ignore them.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MpostStatus mpost_model_new(const char *name,
                                 double nu,
                                 double sigma2,
                                 size_t dim,
                                 struct MpostModel **out);

/**
 * # Safety
 * `model` must come from [`mpost_model_new`] and not be used afterwards.
 */
void mpost_model_free(struct MpostModel *model);

/**
 * Parameter dimension, or 0 for a null handle.
 *
 * # Safety
 * `model` must be a live handle or NULL.
 */
size_t mpost_model_dim(const struct MpostModel *model);

/**
 * Moment estimate from `len` flat observations into `theta` (`theta_len`
 * must equal the model dimension).
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum MpostStatus mpost_estimate(const struct MpostModel *model,
                                const double *data,
                                size_t len,
                                double *theta,
                                size_t theta_len);

/**
 * Draws `draws` posterior samples from the chain started at `theta_n` after
 * `n` observations. `extra` is the truncation offset for truncated and hybrid
 * modes and the stopping offset for exact mode; 0 selects the default.
 * `threads` of 0 uses the global pool. Output is row-major, `draws × dim`.
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum MpostStatus mpost_sample(const struct MpostModel *model,
                              const double *theta_n,
                              size_t theta_len,
                              size_t n,
                              enum MpostMode mode,
                              size_t extra,
                              size_t draws,
                              double temper,
                              uint64_t seed,
                              size_t threads,
                              double *out,
                              size_t out_len);

/**
 * `Σ_{i>n} i⁻²`, or NaN for `n = 0`.
 */
double mpost_tail_weight(size_t n);

/**
 * Equal-tailed credible interval of one column of draws.
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum MpostStatus mpost_credible_interval(const double *draws,
                                         size_t len,
                                         double level,
                                         double *lower,
                                         double *upper);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MPOST_H */
