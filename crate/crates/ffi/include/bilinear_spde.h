#ifndef BILINEAR_SPDE_H
#define BILINEAR_SPDE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum BspdeStatus {
  BSPDE_STATUS_OK = 0,
  // A required pointer argument was null.
  BSPDE_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8 or JSON.
  BSPDE_STATUS_INVALID_STRING = 2,
  // Bad model, parameter, mode or other input.
  BSPDE_STATUS_INVALID_INPUT = 3,
  // File could not be read or written.
  BSPDE_STATUS_IO = 4,
  // Numerical failure, e.g. no exact combination among the given modes.
  BSPDE_STATUS_NUMERICAL = 5,
  // Internal panic; the library state is still usable.
  BSPDE_STATUS_PANIC = 6,
} BspdeStatus;

// Parabolicity check outcome.
typedef enum BspdeVerdict {
  BSPDE_VERDICT_SATISFIED = 0,
  BSPDE_VERDICT_VIOLATED = 1,
  BSPDE_VERDICT_INCONCLUSIVE = 2,
} BspdeVerdict;

// Opaque model handle.
typedef struct BspdeModel BspdeModel;

// Opaque observation set handle.
typedef struct BspdeObservations BspdeObservations;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread, or null if none.
// The pointer stays valid until the next failing call on this thread.
const char *bspde_last_error(void);

// Library version as a static string.
const char *bspde_version(void);

// Builds a builtin model. `params_json` is a JSON object of numeric
// parameters such as `{"J": 10}` and may be null.
//
// # Safety
// `name` and a non-null `params_json` must be NUL-terminated strings and
// `out` must be a valid pointer.
enum BspdeStatus bspde_model_builtin(const char *name,
                                     const char *params_json,
                                     struct BspdeModel **out_model);

// Builds a model from a JSON spec, either `{"builtin": ..}` or `{"custom": ..}`.
//
// # Safety
// `spec_json` must be a NUL-terminated string and `out_model` a valid pointer.
enum BspdeStatus bspde_model_from_json(const char *spec_json, struct BspdeModel **out_model);

// Releases a model. Null is a no-op.
//
// # Safety
// `model` must come from a model constructor and not have been freed.
void bspde_model_free(struct BspdeModel *model);

// Number of modes the model defines.
//
// # Safety
// `model` must be a live handle or null.
size_t bspde_model_k_max(const struct BspdeModel *model);

// Writes rho_k, nu_k, the total loading M_k and eta_k = M_k / nu_k^2.
//
// # Safety
// `model` must be a live handle; the outputs must be valid pointers.
enum BspdeStatus bspde_model_mode(const struct BspdeModel *model,
                                  size_t k,
                                  double *out_rho,
                                  double *out_nu,
                                  double *out_m,
                                  double *out_eta);

// Simulates terminal observations of `modes` under one shared noise draw.
//
// # Safety
// `modes` must point to `n_modes` values; `out_obs` must be a valid pointer.
enum BspdeStatus bspde_simulate(const struct BspdeModel *model,
                                const size_t *modes,
                                size_t n_modes,
                                double theta,
                                double u0,
                                double horizon,
                                uint64_t seed,
                                struct BspdeObservations **out_obs);

// Reads an observation CSV.
//
// # Safety
// `path` must be a NUL-terminated string and `out_obs` a valid pointer.
enum BspdeStatus bspde_observations_read(const char *path, struct BspdeObservations **out_obs);

// Writes an observation CSV.
//
// # Safety
// `obs` must be a live handle and `path` a NUL-terminated string.
enum BspdeStatus bspde_observations_write(const struct BspdeObservations *obs, const char *path);

// Releases an observation set. Null is a no-op.
//
// # Safety
// `obs` must come from an observation constructor and not have been freed.
void bspde_observations_free(struct BspdeObservations *obs);

// Number of observed modes.
//
// # Safety
// `obs` must be a live handle or null.
size_t bspde_observations_len(const struct BspdeObservations *obs);

// Log-ratio ln(u_k(T)/u_k(0)) of an observed mode.
//
// # Safety
// `obs` must be a live handle and `out_v` a valid pointer.
enum BspdeStatus bspde_observations_log_ratio(const struct BspdeObservations *obs,
                                              size_t k,
                                              double *out_v);

// Single-mode MLE. `out_mse` receives the theoretical MSE and may be null.
//
// # Safety
// Handles must be live; `out_theta` must be valid.
enum BspdeStatus bspde_estimate_mle(const struct BspdeModel *model,
                                    const struct BspdeObservations *obs,
                                    size_t k,
                                    double *out_theta,
                                    double *out_mse);

// Weighted average of the MLEs of modes 1..=n. `scheme` is `one`, `k`,
// `inv_k`, `pow:<p>` or a comma list of explicit weights.
//
// # Safety
// Handles must be live, `scheme` NUL-terminated, `out_theta` valid;
// `out_mse` may be null.
enum BspdeStatus bspde_estimate_weighted(const struct BspdeModel *model,
                                         const struct BspdeObservations *obs,
                                         const char *scheme,
                                         size_t n,
                                         double *out_theta,
                                         double *out_mse);

// Aitken-accelerated estimate at mode k from modes k, k+1, k+2.
// `out_degenerate` receives 1 when the second difference vanished and the
// raw MLE was passed through; it may be null.
//
// # Safety
// Handles must be live and `out_theta` valid.
enum BspdeStatus bspde_estimate_aitken(const struct BspdeModel *model,
                                       const struct BspdeObservations *obs,
                                       size_t k,
                                       double *out_theta,
                                       int32_t *out_degenerate);

// Noise-cancelling exact estimate from the given modes.
//
// # Safety
// Handles must be live, `modes` must point to `n_modes` values and
// `out_theta` must be valid.
enum BspdeStatus bspde_estimate_exact(const struct BspdeModel *model,
                                      const struct BspdeObservations *obs,
                                      const size_t *modes,
                                      size_t n_modes,
                                      double *out_theta);

// Checks the eigenvalue parabolicity conditions for k = 1..=k_range at each
// theta sample. `out_first_k` receives the smallest violating mode (0 if
// none) and may be null.
//
// # Safety
// `model` must be live, `thetas` must point to `n_thetas` values and
// `out_verdict` must be valid.
enum BspdeStatus bspde_check_parabolicity(const struct BspdeModel *model,
                                          const double *thetas,
                                          size_t n_thetas,
                                          double delta,
                                          double c1,
                                          double c2,
                                          size_t k_range,
                                          bool require_full_range,
                                          enum BspdeVerdict *out_verdict,
                                          size_t *out_first_k);

// Runs a Monte Carlo study described by `config_json` and writes the report
// CSV to `out_path` with its configuration in `<out_path>.json`.
//
// # Safety
// Both strings must be NUL-terminated.
enum BspdeStatus bspde_run_monte_carlo(const char *config_json, const char *out_path, bool serial);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BILINEAR_SPDE_H */
