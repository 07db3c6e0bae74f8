#ifndef QUINTIC_BLOWUP_H
#define QUINTIC_BLOWUP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum QbStatus {
  QB_STATUS_OK = 0,
  QB_STATUS_NULL_POINTER = 1,
  QB_STATUS_VALIDATION = 2,
  QB_STATUS_NUMERICAL = 3,
  QB_STATUS_DOMAIN = 4,
  QB_STATUS_PANIC = 5,
} QbStatus;

/**
 * Constructed approximate solution u₂ for one parameter set.
 */
typedef struct QbProfile QbProfile;

/**
 * Spectral tables of the linearized operator.
 */
typedef struct QbSpectral QbSpectral;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Crate version as a static NUL-terminated string.
 */
const char *qb_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated, truncated to
 * `len`). Returns the full message length without the terminator.
 *
 * # Safety
 * `buf` must be null or point to at least `len` writable bytes.
 */
uintptr_t qb_last_error(char *buf, uintptr_t len);

/**
 * λ(t) = t^(−1−ν) exp(−ε₀ sin log t).
 *
 * # Safety
 * `out` must be null or writable.
 */
enum QbStatus qb_lambda(double nu, double eps0, double t0, double t, double *out);

/**
 * τ(t) = ∫_t^{t₀} λ(s) ds.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum QbStatus qb_tau_of(double nu, double eps0, double t0, double t, double *out);

/**
 * Builds u₂ with default recursion settings. On success `*out` owns a handle that must be
 * released with `qb_profile_free`.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum QbStatus qb_profile_new(double nu, double eps0, double t0, struct QbProfile **out);

/**
 * Releases a profile handle; null is ignored.
 *
 * # Safety
 * `h` must come from `qb_profile_new` and not be used afterwards.
 */
void qb_profile_free(struct QbProfile *h);

/**
 * u₂(t, r) for 0 ≤ r ≤ t (inside the backward light cone).
 *
 * # Safety
 * `h` must be a live handle or null; `out` must be null or writable.
 */
enum QbStatus qb_profile_u2(const struct QbProfile *h, double t, double r, double *out);

/**
 * Normalized cone error t²λ^(−1/2)e₂ at comoving radius R = λr ≤ μ.
 *
 * # Safety
 * As for `qb_profile_u2`.
 */
enum QbStatus qb_profile_e2(const struct QbProfile *h, double t, double big_r, double *out);

/**
 * Fitted growth constant C₀ of the level-`level` series (1 or 2).
 *
 * # Safety
 * As for `qb_profile_u2`.
 */
enum QbStatus qb_profile_growth(const struct QbProfile *h, uint32_t level, double *out);

/**
 * The negative eigenvalue ξ_d of −∂_R² − 5W⁴ on the half line.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum QbStatus qb_xi_d(double *out);

/**
 * Builds the spectral tables with default resolution (a few seconds).
 *
 * # Safety
 * `out` must be null or writable.
 */
enum QbStatus qb_spectral_new(struct QbSpectral **out);

/**
 * Releases a spectral handle; null is ignored.
 *
 * # Safety
 * `h` must come from `qb_spectral_new` and not be used afterwards.
 */
void qb_spectral_free(struct QbSpectral *h);

/**
 * Spectral density ρ(ξ) for ξ > 0.
 *
 * # Safety
 * `h` must be a live handle or null; `out` must be null or writable.
 */
enum QbStatus qb_spectral_density(const struct QbSpectral *h, double xi, double *out);

/**
 * ξ_d stored in a spectral handle.
 *
 * # Safety
 * As for `qb_spectral_density`.
 */
enum QbStatus qb_spectral_xi_d(const struct QbSpectral *h, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUINTIC_BLOWUP_H */
