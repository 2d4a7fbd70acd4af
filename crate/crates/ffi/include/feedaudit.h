#ifndef FEEDAUDIT_H
#define FEEDAUDIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  FA_STATUS_OK = 0,
  FA_STATUS_NULL_POINTER = 1,
  FA_STATUS_INVALID_UTF8 = 2,
  FA_STATUS_DIMENSION = 3,
  FA_STATUS_PARAMETER_DOMAIN = 4,
  FA_STATUS_EMPTY_FEED = 5,
  FA_STATUS_OUT_OF_SUPPORT = 6,
  FA_STATUS_SINGULAR_INFORMATION = 7,
  FA_STATUS_RANGE = 8,
  FA_STATUS_SHAPE = 9,
  FA_STATUS_FAMILY = 10,
  FA_STATUS_CONFIG = 11,
  FA_STATUS_SOURCE = 12,
  FA_STATUS_IO = 13,
  FA_STATUS_BUFFER_TOO_SMALL = 14,
  FA_STATUS_PANIC = 15,
} FaStatus;

typedef enum {
  FA_VERDICT_PASS = 0,
  FA_VERDICT_FAIL = 1,
} FaVerdict;

/**
 * Opaque handle to a model family.
 */
typedef struct FaFamily FaFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a family from a JSON descriptor such as
 * `{"id": "gaussian-mean-var"}` and stores the new handle in `*out`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
FaStatus fa_family_from_json(const char *json, FaFamily **out);

/**
 * Releases a handle from [`fa_family_from_json`]. Null is a no-op.
 *
 * # Safety
 * `family` must be null or a live handle, not used afterwards.
 */
void fa_family_free(FaFamily *family);

/**
 * Parameter dimension r, or 0 for a null handle.
 *
 * # Safety
 * `family` must be null or a live handle.
 */
size_t fa_family_dimension(const FaFamily *family);

/**
 * Closed-form MLE of `items[0..m]`, written to `theta_out[0..r]`.
 * `boundary_out` may be null.
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
FaStatus fa_family_mle(const FaFamily *family,
                       const double *items,
                       size_t m,
                       double *theta_out,
                       size_t theta_len,
                       bool *boundary_out);

/**
 * Fisher information at `theta[0..r]`, written row-major to `out[0..r*r]`.
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
FaStatus fa_family_fisher(const FaFamily *family,
                          const double *theta,
                          size_t r,
                          double *out,
                          size_t out_len);

/**
 * The `a`-quantile of the χ² distribution with `r` degrees of freedom.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
FaStatus fa_chi_squared_quantile(uint32_t r, double a, double *out);

/**
 * The rejection threshold τ = (2/m)·χ²_r(1 − α).
 *
 * # Safety
 * `tau_out` must be a writable pointer.
 */
FaStatus fa_audit_threshold(size_t r, size_t m, double alpha, double *tau_out);

/**
 * Decision-robustness check of two feeds of length `m` at level `alpha`.
 * The two test statistics are written to `stat_prime` and
 * `stat_double_prime` when those are non-null.
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
FaStatus fa_decision_robustness_check(const FaFamily *family,
                                      const double *filtered,
                                      const double *baseline,
                                      size_t m,
                                      double alpha,
                                      FaVerdict *verdict_out,
                                      double *stat_prime,
                                      double *stat_double_prime);

/**
 * Wald statistic (θ₁ − θ₂)ᵀ I(θ_at) (θ₁ − θ₂) for three points of dimension r.
 *
 * # Safety
 * Pointers must be valid for `r` doubles; `out` must be writable.
 */
FaStatus fa_wald_statistic(const FaFamily *family,
                           const double *theta1,
                           const double *theta2,
                           const double *theta_at,
                           size_t r,
                           double *out);

/**
 * Message of the last failed call on this thread, or null. The string is
 * owned by the caller and must be released with [`fa_string_free`].
 */
char *fa_last_error_message(void);

/**
 * Releases a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must be null or a string from [`fa_last_error_message`], freed once.
 */
void fa_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fa_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEEDAUDIT_H */
