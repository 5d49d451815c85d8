#ifndef PNP_DG_H
#define PNP_DG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum PnpStatus {
  PNP_STATUS_OK = 0,
  PNP_STATUS_NULL_POINTER = 1,
  PNP_STATUS_INVALID_UTF8 = 2,
  PNP_STATUS_CONFIG = 3,
  PNP_STATUS_SOLVER = 4,
  PNP_STATUS_BUFFER_TOO_SMALL = 5,
  PNP_STATUS_OUT_OF_RANGE = 6,
  PNP_STATUS_PANIC = 7,
} PnpStatus;

/**
 * Opaque solver handle.
 */
typedef struct PnpSolver PnpSolver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a solver for a built-in scenario (`example1` to `example4`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PnpStatus pnp_solver_from_scenario(const char *name, struct PnpSolver **out);

/**
 * Create a solver from a JSON scenario document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PnpStatus pnp_solver_from_json(const char *json, struct PnpSolver **out);

/**
 * Release a solver. Passing null is allowed.
 *
 * # Safety
 * `solver` must come from one of the constructors and not be used afterwards.
 */
void pnp_solver_free(struct PnpSolver *solver);

/**
 * Take `n` steps of the configured size `μ h²`.
 *
 * # Safety
 * `solver` must be a live handle.
 */
enum PnpStatus pnp_solver_step(struct PnpSolver *solver, size_t n);

/**
 * Advance to time `t` with equal steps no larger than the configured one.
 *
 * # Safety
 * `solver` must be a live handle.
 */
enum PnpStatus pnp_solver_advance_to(struct PnpSolver *solver, double t);

/**
 * Advance to the final time of the scenario.
 *
 * # Safety
 * `solver` must be a live handle.
 */
enum PnpStatus pnp_solver_run(struct PnpSolver *solver);

/**
 * Current time and number of steps taken.
 *
 * # Safety
 * `solver` must be a live handle; `time` and `steps` valid pointers.
 */
enum PnpStatus pnp_solver_time(const struct PnpSolver *solver, double *time, size_t *steps);

/**
 * Number of species, cells and the polynomial degree.
 *
 * # Safety
 * `solver` must be a live handle; the outputs valid pointers.
 */
enum PnpStatus pnp_solver_shape(const struct PnpSolver *solver,
                                size_t *species,
                                size_t *cells,
                                size_t *degree);

/**
 * Copy the Legendre coefficients of one species, cell by cell, into `buf`.
 * `len` must be at least `cells * (degree + 1)`.
 *
 * # Safety
 * `solver` must be a live handle and `buf` valid for `len` doubles.
 */
enum PnpStatus pnp_solver_concentration(const struct PnpSolver *solver,
                                        size_t species,
                                        double *buf,
                                        size_t len);

/**
 * Copy the Legendre coefficients of the potential of the current state into `buf`.
 *
 * # Safety
 * `solver` must be a live handle and `buf` valid for `len` doubles.
 */
enum PnpStatus pnp_solver_potential(const struct PnpSolver *solver, double *buf, size_t len);

/**
 * Total mass of one species.
 *
 * # Safety
 * `solver` must be a live handle and `out` a valid pointer.
 */
enum PnpStatus pnp_solver_mass(const struct PnpSolver *solver, size_t species, double *out);

/**
 * Discrete free energy of the current state.
 *
 * # Safety
 * `solver` must be a live handle and `out` a valid pointer.
 */
enum PnpStatus pnp_solver_free_energy(const struct PnpSolver *solver, double *out);

/**
 * Message of the last failed call on this thread, or null. Valid until the next failing call.
 */
const char *pnp_last_error(void);

/**
 * Static description of a status code.
 */
const char *pnp_status_string(enum PnpStatus status);

/**
 * Library version as a static string.
 */
const char *pnp_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PNP_DG_H */
