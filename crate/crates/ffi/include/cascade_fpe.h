#ifndef CASCADE_FPE_H
#define CASCADE_FPE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Bumped on any incompatible change to the exported signatures.
 */
#define CFPE_ABI_VERSION 1

typedef enum CfpeStatus {
  CFPE_STATUS_OK = 0,
  CFPE_STATUS_NULL_POINTER = 1,
  CFPE_STATUS_INVALID_ARGUMENT = 2,
  CFPE_STATUS_DOMAIN = 3,
  CFPE_STATUS_UNSUPPORTED = 4,
  CFPE_STATUS_DEGENERATE_MEASURE = 5,
  CFPE_STATUS_RANGE = 6,
  CFPE_STATUS_MASS_AUDIT = 7,
  CFPE_STATUS_CONTRACT = 8,
  CFPE_STATUS_PANIC = 9,
} CfpeStatus;

/**
 * Opaque initial condition.
 */
typedef struct CfpeInitial CfpeInitial;

/**
 * Opaque coefficient profile.
 */
typedef struct CfpeProfile CfpeProfile;

/**
 * Integrated coefficients at one scale.
 */
typedef struct CfpeIntegrated {
  double beta0;
  double beta1;
  double gamma;
  double lambda;
} CfpeIntegrated;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

uint32_t cfpe_abi_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next call into this library from the same thread.
 */
const char *cfpe_last_error(void);

/**
 * Constant rates `a`, `c` on `[0, lambda_max]`.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum CfpeStatus cfpe_profile_constant(double a,
                                      double c,
                                      double lambda_max,
                                      struct CfpeProfile **out);

/**
 * Profile from its JSON form, e.g.
 * `{"a": {"kind": "polynomial", "coefficients": [1, 1]}, "c": {...}, "lambda_max": 2}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` a valid handle slot.
 */
enum CfpeStatus cfpe_profile_from_json(const char *json, struct CfpeProfile **out);

/**
 * # Safety
 * `profile` must come from a `cfpe_profile_*` constructor and not be used
 * afterwards. NULL is ignored.
 */
void cfpe_profile_free(struct CfpeProfile *profile);

/**
 * # Safety
 * `profile` must be a live handle; `out` a valid pointer.
 */
enum CfpeStatus cfpe_profile_integrate(const struct CfpeProfile *profile,
                                       double lambda,
                                       struct CfpeIntegrated *out);

/**
 * # Safety
 * `out` must be a valid handle slot.
 */
enum CfpeStatus cfpe_initial_dirac(double v0, struct CfpeInitial **out);

/**
 * # Safety
 * `out` must be a valid handle slot.
 */
enum CfpeStatus cfpe_initial_lognormal(double mu, double sigma2, struct CfpeInitial **out);

/**
 * Samples of `phi(e^y)` on `n` uniform nodes spanning `[y_min, y_max]`. When
 * `probability` is set the samples must integrate to one against `dv`.
 *
 * # Safety
 * `samples` must point to `n` readable doubles; `out` a valid handle slot.
 */
enum CfpeStatus cfpe_initial_grid(double y_min,
                                  double y_max,
                                  const double *samples,
                                  size_t n,
                                  bool probability,
                                  struct CfpeInitial **out);

/**
 * Initial condition from its JSON form (`{"kind": "lognormal", ...}`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` a valid handle slot.
 */
enum CfpeStatus cfpe_initial_from_json(const char *json, struct CfpeInitial **out);

/**
 * # Safety
 * As [`cfpe_profile_free`].
 */
void cfpe_initial_free(struct CfpeInitial *ic);

/**
 * `P(lambda, e^y)` for non-atomic data, Gauss-Hermite order `gh_order`.
 *
 * # Safety
 * Handles must be live; `out` a valid pointer.
 */
enum CfpeStatus cfpe_solve_at(const struct CfpeProfile *profile,
                              const struct CfpeInitial *ic,
                              double lambda,
                              double y,
                              size_t gh_order,
                              double *out);

/**
 * Closed-form solution for an atom at `v0`.
 *
 * # Safety
 * `profile` must be live; `out` a valid pointer.
 */
enum CfpeStatus cfpe_solve_delta(const struct CfpeProfile *profile,
                                 double v0,
                                 double lambda,
                                 double y,
                                 double *out);

/**
 * The solution on `n_points` uniform nodes of `[y_min, y_max]`, written to
 * `values`.
 *
 * # Safety
 * Handles must be live; `values` must hold `n_points` doubles.
 */
enum CfpeStatus cfpe_solve_grid(const struct CfpeProfile *profile,
                                const struct CfpeInitial *ic,
                                double lambda,
                                double y_min,
                                double y_max,
                                size_t n_points,
                                size_t gh_order,
                                double *values);

/**
 * `n` exact terminal samples from an atom at `v0`. Output depends only on
 * the arguments, not on the thread count.
 *
 * # Safety
 * `profile` must be live; `samples` must hold `n` doubles.
 */
enum CfpeStatus cfpe_sample_exact(const struct CfpeProfile *profile,
                                  double v0,
                                  double lambda,
                                  size_t n,
                                  uint64_t seed,
                                  double *samples);

/**
 * `<v^n>` at `lambda`; closed form for atoms, quadrature otherwise.
 *
 * # Safety
 * Handles must be live; `out` a valid pointer.
 */
enum CfpeStatus cfpe_moment(const struct CfpeProfile *profile,
                            const struct CfpeInitial *ic,
                            uint32_t n,
                            double lambda,
                            size_t gh_order,
                            double *out);

/**
 * `zeta_n = n (a + c) - n^2 c` for each of `count` orders.
 *
 * # Safety
 * `orders` must hold `count` values and `out` room for `count` doubles.
 */
enum CfpeStatus cfpe_scaling_exponents(double a,
                                       double c,
                                       const uint32_t *orders,
                                       size_t count,
                                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CASCADE_FPE_H */
