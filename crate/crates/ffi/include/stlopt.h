#ifndef STLOPT_H
#define STLOPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Formulation used by [`stlopt_solve`].
 */
typedef enum StloptMethod {
  STLOPT_METHOD_EXACT = 0,
  STLOPT_METHOD_SMOOTH_APPROX = 1,
} StloptMethod;

/**
 * Solver outcome of a result.
 */
typedef enum StloptSolveStatus {
  STLOPT_SOLVE_STATUS_OPTIMAL = 0,
  STLOPT_SOLVE_STATUS_FEASIBLE = 1,
  STLOPT_SOLVE_STATUS_INFEASIBLE = 2,
  STLOPT_SOLVE_STATUS_MAX_ITER = 3,
} StloptSolveStatus;

/**
 * Result code of every fallible call.
 */
typedef enum StloptStatus {
  STLOPT_STATUS_OK = 0,
  STLOPT_STATUS_NULL_POINTER = 1,
  STLOPT_STATUS_INVALID_ARGUMENT = 2,
  STLOPT_STATUS_INVALID_UTF8 = 3,
  STLOPT_STATUS_SCENARIO = 4,
  STLOPT_STATUS_SOLVER = 5,
  STLOPT_STATUS_BUFFER_TOO_SMALL = 6,
  STLOPT_STATUS_PANIC = 7,
} StloptStatus;

/**
 * Opaque solve result handle.
 */
typedef struct StloptResult StloptResult;

/**
 * Opaque scenario handle.
 */
typedef struct StloptScenario StloptScenario;

/**
 * Solver settings; start from [`stlopt_options_default`].
 */
typedef struct StloptOptions {
  double kkt_tol;
  double feas_tol;
  uint32_t max_outer;
  uint32_t max_inner;
  /**
   * Wall-clock limit in seconds.
   */
  double time_limit;
  /**
   * Smooth-baseline sharpness; `<= 0` selects it automatically.
   */
  double k;
} StloptOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *stlopt_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *stlopt_last_error(void);

/**
 * Default solver settings with automatic sharpness selection.
 */
struct StloptOptions stlopt_options_default(void);

/**
 * Loads a built-in scenario. `horizon == 0` keeps its default horizon.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum StloptStatus stlopt_scenario_builtin(const char *name,
                                          uint32_t horizon,
                                          struct StloptScenario **out);

/**
 * Parses a scenario from its JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum StloptStatus stlopt_scenario_from_json(const char *json, struct StloptScenario **out);

/**
 * Releases a scenario; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void stlopt_scenario_free(struct StloptScenario *s);

/**
 * Horizon `T`; trajectories have `T + 1` samples. Zero for null.
 *
 * # Safety
 * `s` must be null or a live scenario handle.
 */
size_t stlopt_scenario_horizon(const struct StloptScenario *s);

/**
 * # Safety
 * `s` must be null or a live scenario handle.
 */
size_t stlopt_scenario_state_dim(const struct StloptScenario *s);

/**
 * # Safety
 * `s` must be null or a live scenario handle.
 */
size_t stlopt_scenario_input_dim(const struct StloptScenario *s);

/**
 * Discrete robustness of a trajectory given as row-major buffers of
 * `(T + 1)·n` states and `(T + 1)·m` inputs.
 *
 * # Safety
 * Buffers must hold the stated number of doubles; `out` must be valid.
 */
enum StloptStatus stlopt_robustness(const struct StloptScenario *s,
                                    const double *states,
                                    size_t states_len,
                                    const double *inputs,
                                    size_t inputs_len,
                                    double *out);

/**
 * Solves the scenario from its reference trajectory. `options` may be null
 * for defaults.
 *
 * # Safety
 * `s` must be a live scenario handle, `options` null or valid, and `out`
 * a valid pointer.
 */
enum StloptStatus stlopt_solve(const struct StloptScenario *s,
                               enum StloptMethod method,
                               const struct StloptOptions *options,
                               struct StloptResult **out);

/**
 * Releases a result; null is ignored.
 *
 * # Safety
 * `r` must come from this library and not be used afterwards.
 */
void stlopt_result_free(struct StloptResult *r);

/**
 * # Safety
 * `r` must be null or a live result handle; null gives NaN (or
 * `Infeasible` for the status).
 */
enum StloptSolveStatus stlopt_result_status(const struct StloptResult *r);

/**
 * `−α·ρ + Σ xᵀQx + uᵀRu` with the discrete robustness.
 *
 * # Safety
 * `r` must be null or a live result handle; null gives NaN (or
 * `Infeasible` for the status).
 */
double stlopt_result_objective(const struct StloptResult *r);

/**
 * Discrete robustness of the returned trajectory.
 *
 * # Safety
 * `r` must be null or a live result handle; null gives NaN (or
 * `Infeasible` for the status).
 */
double stlopt_result_robustness(const struct StloptResult *r);

/**
 * Solve time in seconds.
 *
 * # Safety
 * `r` must be null or a live result handle; null gives NaN (or
 * `Infeasible` for the status).
 */
double stlopt_result_solve_time(const struct StloptResult *r);

/**
 * Sharpness used by the smooth baseline, or 0 for the exact method.
 *
 * # Safety
 * `r` must be null or a live result handle; null gives NaN (or
 * `Infeasible` for the status).
 */
double stlopt_result_k(const struct StloptResult *r);

/**
 * Copies the `(T + 1)·n` row-major states into `buf`. With a null `buf`
 * only the required length is stored in `written`.
 *
 * # Safety
 * `r` must be a live result handle; `buf` null or valid for `len` doubles;
 * `written` null or valid.
 */
enum StloptStatus stlopt_result_states(const struct StloptResult *r,
                                       double *buf,
                                       size_t len,
                                       size_t *written);

/**
 * Copies the `(T + 1)·m` row-major inputs; same contract as
 * [`stlopt_result_states`].
 *
 * # Safety
 * See [`stlopt_result_states`].
 */
enum StloptStatus stlopt_result_inputs(const struct StloptResult *r,
                                       double *buf,
                                       size_t len,
                                       size_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STLOPT_H */
