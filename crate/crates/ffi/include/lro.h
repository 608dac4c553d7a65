#ifndef LRO_H
#define LRO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum LroStatus {
  LRO_STATUS_OK = 0,
  LRO_STATUS_NULL_POINTER = 1,
  LRO_STATUS_INVALID_INPUT = 2,
  /*
   No `x` observation lies below a `y` observation.
   */
  LRO_STATUS_DEGENERATE_ORDER = 3,
  LRO_STATUS_DOMAIN = 4,
  /*
   A variance or nuisance estimate is undefined at the point.
   */
  LRO_STATUS_UNDEFINED = 5,
  LRO_STATUS_UNSUPPORTED_POINT = 6,
  LRO_STATUS_MISSING_QUANTILE = 7,
  LRO_STATUS_BUFFER_TOO_SMALL = 8,
  /*
   A Rust panic was caught at the boundary.
   */
  LRO_STATUS_INTERNAL = 9,
} LroStatus;

/*
 Interval methods available through [`lro_fit_ci`].
 */
typedef enum LroCiMethod {
  LRO_CI_METHOD_DISCRETE_WALD = 0,
  LRO_CI_METHOD_THETA_WALD = 1,
  LRO_CI_METHOD_MU_WALD_TRANSFORMED = 2,
  LRO_CI_METHOD_LRT = 3,
} LroCiMethod;

/*
 Opaque fitted model.
 */
typedef struct LroFitHandle LroFitHandle;

typedef struct LroInterval {
  double z;
  double estimate;
  double lower;
  /*
   May be `+inf`.
   */
  double upper;
  double level;
} LroInterval;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Fits the model to `x[0..nx]` and `y[0..ny]` and stores a new handle in
 `*out`. The handle must be released with [`lro_fit_free`].

 # Safety
 `x` and `y` must point to `nx` and `ny` readable doubles; `out` must be
 writable.
 */
enum LroStatus lro_fit_new(const double *x,
                           size_t nx,
                           const double *y,
                           size_t ny,
                           struct LroFitHandle **out);

/*
 Releases a handle. Null is ignored.

 # Safety
 `fit` must come from [`lro_fit_new`] and not have been freed.
 */
void lro_fit_free(struct LroFitHandle *fit);

/*
 Density ratio estimate `theta*(z)`; may be `+inf`.

 # Safety
 `fit` must be a live handle and `out` writable.
 */
enum LroStatus lro_fit_theta(const struct LroFitHandle *fit, double z, double *out);

/*
 Fitted distribution function `F*(z)` of the first sample.

 # Safety
 `fit` must be a live handle and `out` writable.
 */
enum LroStatus lro_fit_f_star(const struct LroFitHandle *fit, double z, double *out);

/*
 Fitted distribution function `G*(z)` of the second sample.

 # Safety
 `fit` must be a live handle and `out` writable.
 */
enum LroStatus lro_fit_g_star(const struct LroFitHandle *fit, double z, double *out);

/*
 Fraction of observations in the first sample.

 # Safety
 `fit` must be a live handle and `out` writable.
 */
enum LroStatus lro_fit_pi_n(const struct LroFitHandle *fit, double *out);

/*
 Copies the step representation of `theta*`: `levels[i]` holds on
 `(breakpoints[i-1], breakpoints[i]]`. `*n_levels` receives the number of
 levels; there is one breakpoint fewer. With `capacity` below the level
 count nothing is copied and `BufferTooSmall` is returned, so a call with
 `capacity = 0` queries the size.

 # Safety
 `breakpoints` and `levels` must have room for `capacity - 1` and
 `capacity` doubles; `n_levels` must be writable.
 */
enum LroStatus lro_fit_theta_steps(const struct LroFitHandle *fit,
                                   double *breakpoints,
                                   double *levels,
                                   size_t capacity,
                                   size_t *n_levels);

/*
 Confidence interval for `theta(z)` with default tuning constants.

 # Safety
 `fit` must be a live handle and `out` writable.
 */
enum LroStatus lro_fit_ci(const struct LroFitHandle *fit,
                          enum LroCiMethod method,
                          double z,
                          double level,
                          struct LroInterval *out);

/*
 Sample-splitting interval from `m` random subsamples drawn with `seed`.

 # Safety
 `fit` must be a live handle and `out` writable.
 */
enum LroStatus lro_fit_split_ci(const struct LroFitHandle *fit,
                                double z,
                                double level,
                                size_t m,
                                uint64_t seed,
                                struct LroInterval *out);

/*
 Message for the last failed call on this thread; empty after a success.
 The pointer stays valid until the next call on the same thread.
 */
const char *lro_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *lro_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LRO_H */
