#ifndef SPLITSYS_H
#define SPLITSYS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SplitsysStatus {
  SPLITSYS_STATUS_OK = 0,
  SPLITSYS_STATUS_NULL_POINTER = 1,
  SPLITSYS_STATUS_INVALID_ARGUMENT = 2,
  SPLITSYS_STATUS_PARSE = 3,
  SPLITSYS_STATUS_IO = 4,
  SPLITSYS_STATUS_NOT_MONOTONE = 5,
  SPLITSYS_STATUS_DOMAIN = 6,
  SPLITSYS_STATUS_DIMENSION_MISMATCH = 7,
  SPLITSYS_STATUS_BUFFER_TOO_SMALL = 8,
  SPLITSYS_STATUS_INTERNAL = 9,
} SplitsysStatus;

typedef enum SplitsysStructure {
  SPLITSYS_STRUCTURE_AFFINE_VI = 0,
  SPLITSYS_STRUCTURE_MIXED_L1 = 1,
} SplitsysStructure;

/**
 * Termination state of a solve.
 */
typedef enum SplitsysSolveStatus {
  SPLITSYS_SOLVE_STATUS_SOLVED = 0,
  SPLITSYS_SOLVE_STATUS_INTERRUPTED = 1,
  SPLITSYS_SOLVE_STATUS_MAX_ITERATIONS = 3,
  SPLITSYS_SOLVE_STATUS_LINESEARCH_FAILURE = 4,
} SplitsysSolveStatus;

/**
 * Opaque problem instance.
 */
typedef struct SplitsysInstance SplitsysInstance;

/**
 * Opaque solver parameters.
 */
typedef struct SplitsysParams SplitsysParams;

/**
 * Opaque solve result.
 */
typedef struct SplitsysResult SplitsysResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *splitsys_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void splitsys_string_free(char *s);

/**
 * Parses and validates an instance from JSON.
 *
 * # Safety
 * `json` must be a valid nul-terminated string; `out` must be writable.
 */
enum SplitsysStatus splitsys_instance_from_json(const char *json,
                                                bool allow_unchecked,
                                                struct SplitsysInstance **out);

/**
 * Generates an instance with a planted solution.
 *
 * # Safety
 * `out` must be writable.
 */
enum SplitsysStatus splitsys_instance_generate(size_t n,
                                               size_t m,
                                               uint64_t seed,
                                               enum SplitsysStructure structure,
                                               struct SplitsysInstance **out);

/**
 * Serializes an instance to JSON; free the result with [`splitsys_string_free`].
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum SplitsysStatus splitsys_instance_to_json(const struct SplitsysInstance *inst, char **out);

/**
 * Dimension `n`, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t splitsys_instance_dimension(const struct SplitsysInstance *inst);

/**
 * Number of components `m`, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t splitsys_instance_components(const struct SplitsysInstance *inst);

/**
 * Copies the known solution into `out[0..n]`.
 *
 * # Safety
 * `inst` must be a live handle; `out` must hold `len` doubles.
 */
enum SplitsysStatus splitsys_instance_known_solution(const struct SplitsysInstance *inst,
                                                     double *out,
                                                     size_t len);

/**
 * # Safety
 * `inst` must be null or a handle not yet freed.
 */
void splitsys_instance_free(struct SplitsysInstance *inst);

/**
 * Default parameters; never null.
 */
struct SplitsysParams *splitsys_params_new(void);

/**
 * # Safety
 * `p` must be null or a handle not yet freed.
 */
void splitsys_params_free(struct SplitsysParams *p);

/**
 * Backtracking factor in (0, 1).
 *
 * # Safety
 * `p` must be a live handle.
 */
enum SplitsysStatus splitsys_params_set_theta(struct SplitsysParams *p, double theta);

/**
 * Acceptance constant in (0, 1).
 *
 * # Safety
 * `p` must be a live handle.
 */
enum SplitsysStatus splitsys_params_set_delta(struct SplitsysParams *p, double delta);

/**
 * Step bounds; the schedule is reset to the midpoint.
 *
 * # Safety
 * `p` must be a live handle.
 */
enum SplitsysStatus splitsys_params_set_beta_bounds(struct SplitsysParams *p, double lo, double hi);

/**
 * Constant step inside the current bounds.
 *
 * # Safety
 * `p` must be a live handle.
 */
enum SplitsysStatus splitsys_params_set_beta_constant(struct SplitsysParams *p, double beta);

/**
 * Per-component and outer tolerances.
 *
 * # Safety
 * `p` must be a live handle.
 */
enum SplitsysStatus splitsys_params_set_tolerances(struct SplitsysParams *p,
                                                   double tol_component,
                                                   double tol_outer);

/**
 * # Safety
 * `p` must be a live handle.
 */
enum SplitsysStatus splitsys_params_set_limits(struct SplitsysParams *p,
                                               size_t max_outer,
                                               size_t max_linesearch);

/**
 * Selection radius; a non-positive value restores the instance default.
 *
 * # Safety
 * `p` must be a live handle.
 */
enum SplitsysStatus splitsys_params_set_radius(struct SplitsysParams *p, double radius);

/**
 * Natural residual of `x` at step `beta`.
 *
 * # Safety
 * `inst` must be a live handle, `x` must hold `len` doubles, `out` writable.
 */
enum SplitsysStatus splitsys_residual(const struct SplitsysInstance *inst,
                                      double beta,
                                      const double *x,
                                      size_t len,
                                      double *out);

/**
 * Runs the solver. `x0` may be null to use the instance's default start.
 * Returns `Ok` whenever a run took place; inspect the result's status.
 *
 * # Safety
 * Handles must be live; `x0` null or holding `len` doubles; `out` writable.
 */
enum SplitsysStatus splitsys_solve(const struct SplitsysInstance *inst,
                                   const struct SplitsysParams *params,
                                   const double *x0,
                                   size_t len,
                                   struct SplitsysResult **out);

/**
 * Fixed-step forward-backward baseline on a single-component instance.
 *
 * # Safety
 * As for [`splitsys_solve`].
 */
enum SplitsysStatus splitsys_solve_baseline(const struct SplitsysInstance *inst,
                                            const double *x0,
                                            size_t len,
                                            double step,
                                            size_t max_iter,
                                            double tol,
                                            struct SplitsysResult **out);

/**
 * # Safety
 * `res` must be a live handle.
 */
enum SplitsysSolveStatus splitsys_result_status(const struct SplitsysResult *res);

/**
 * Completed outer iterations.
 *
 * # Safety
 * `res` must be null or a live handle.
 */
size_t splitsys_result_iterations(const struct SplitsysResult *res);

/**
 * Natural residual at the final iterate; NaN for a null handle.
 *
 * # Safety
 * `res` must be null or a live handle.
 */
double splitsys_result_final_residual(const struct SplitsysResult *res);

/**
 * Increases of the distance to the known solution across iterations.
 *
 * # Safety
 * `res` must be null or a live handle.
 */
size_t splitsys_result_fejer_violations(const struct SplitsysResult *res);

/**
 * Copies the final iterate into `out[0..n]`.
 *
 * # Safety
 * `res` must be a live handle; `out` must hold `len` doubles.
 */
enum SplitsysStatus splitsys_result_x_final(const struct SplitsysResult *res,
                                            double *out,
                                            size_t len);

/**
 * Trace as CSV text; free with [`splitsys_string_free`].
 *
 * # Safety
 * `res` must be a live handle; `out` must be writable.
 */
enum SplitsysStatus splitsys_result_trace_csv(const struct SplitsysResult *res, char **out);

/**
 * # Safety
 * `res` must be null or a handle not yet freed.
 */
void splitsys_result_free(struct SplitsysResult *res);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPLITSYS_H */
