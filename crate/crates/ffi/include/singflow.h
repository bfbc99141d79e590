#ifndef SINGFLOW_H
#define SINGFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_POINTER = 1,
  SF_STATUS_INVALID_ARGUMENT = 2,
  SF_STATUS_NON_CONVERGENCE = 3,
  SF_STATUS_NOT_APPLICABLE = 4,
  SF_STATUS_NOT_EXTINCT = 5,
  SF_STATUS_BUFFER_TOO_SMALL = 6,
  SF_STATUS_IO = 7,
  SF_STATUS_PANIC = 8,
} SfStatus;

/**
 * Opaque elliptic solution.
 */
typedef struct SfEllipticSolution SfEllipticSolution;

/**
 * Opaque trajectory.
 */
typedef struct SfEvolution SfEvolution;

/**
 * Opaque integrand `W`.
 */
typedef struct SfNonlinearity SfNonlinearity;

/**
 * Opaque modulus `Φ`.
 */
typedef struct SfOrlicz SfOrlicz;

/**
 * Scalar diagnostics of an elliptic solve.
 */
typedef struct SfSolveReport {
  uint64_t newton_iters;
  double objective_value;
  double weak_residual;
  double inclusion_gap;
  double energy;
  /**
   * NaN when no modulus was computed.
   */
  double modulus_g;
} SfSolveReport;

/**
 * Per-step diagnostics; step 0 is the initial state.
 */
typedef struct SfStepRecord {
  uint64_t step;
  double t;
  double energy;
  double modulus_g;
  double mean;
  double dist_to_mean;
  double dissipation;
  double xi_bound;
  double inclusion_gap;
} SfStepRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library.
 */
const char *sf_last_error_message(void);

/**
 * Catalog integrand by name: `abs`, `two_kink`, `minimal_surface`,
 * `abs_plus_ms`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SfStatus sf_nonlinearity_new(const char *name, struct SfNonlinearity **out);

/**
 * Piecewise-linear integrand from `(breakpoint, slope)` pairs on `p ≥ 0`.
 *
 * # Safety
 * `breakpoints` and `slopes` must point to `len` values; `out` must be valid.
 */
enum SfStatus sf_nonlinearity_custom(const double *breakpoints,
                                     const double *slopes,
                                     size_t len,
                                     struct SfNonlinearity **out);

/**
 * `W(p)`.
 *
 * # Safety
 * `w` must come from a constructor above; `value` must be valid.
 */
enum SfStatus sf_nonlinearity_eval(const struct SfNonlinearity *w, double p, double *value);

/**
 * Subdifferential `∂W(p) = [lo, hi]`.
 *
 * # Safety
 * `w` must be a live handle; `lo` and `hi` must be valid.
 */
enum SfStatus sf_nonlinearity_subdiff(const struct SfNonlinearity *w,
                                      double p,
                                      double *lo,
                                      double *hi);

/**
 * Recession slope `W^∞` and coercivity constant `α`.
 *
 * # Safety
 * `w` must be a live handle; outputs must be valid.
 */
enum SfStatus sf_nonlinearity_constants(const struct SfNonlinearity *w,
                                        double *w_inf,
                                        double *alpha);

/**
 * # Safety
 * `w` must be null or a handle not yet freed.
 */
void sf_nonlinearity_free(struct SfNonlinearity *w);

/**
 * One regularized solve started from `u = f`.
 *
 * # Safety
 * `f` must point to `n` values; `w` must be live; `out` must be valid.
 */
enum SfStatus sf_elliptic_solve(const double *f,
                                size_t n,
                                double h,
                                const struct SfNonlinearity *w,
                                double gamma,
                                double epsilon,
                                struct SfEllipticSolution **out);

/**
 * Continuation from `γ = ε = 1e-2` down to the given final values.
 *
 * # Safety
 * As for [`sf_elliptic_solve`].
 */
enum SfStatus sf_elliptic_continue(const double *f,
                                   size_t n,
                                   double h,
                                   const struct SfNonlinearity *w,
                                   double gamma,
                                   double epsilon,
                                   struct SfEllipticSolution **out);

/**
 * Grid size of the solution.
 *
 * # Safety
 * `sol` must be a live handle.
 */
size_t sf_elliptic_solution_len(const struct SfEllipticSolution *sol);

/**
 * Copies `u` into `out` (capacity `capacity`).
 *
 * # Safety
 * `sol` must be live; `out` must hold `capacity` values.
 */
enum SfStatus sf_elliptic_solution_u(const struct SfEllipticSolution *sol,
                                     double *out,
                                     size_t capacity);

/**
 * Copies the flux `ξ` (interface values) into `out`.
 *
 * # Safety
 * As for [`sf_elliptic_solution_u`].
 */
enum SfStatus sf_elliptic_solution_xi(const struct SfEllipticSolution *sol,
                                      double *out,
                                      size_t capacity);

/**
 * # Safety
 * `sol` must be live; `report` must be valid.
 */
enum SfStatus sf_elliptic_solution_report(const struct SfEllipticSolution *sol,
                                          struct SfSolveReport *report);

/**
 * # Safety
 * `sol` must be null or a handle not yet freed.
 */
void sf_elliptic_solution_free(struct SfEllipticSolution *sol);

/**
 * Implicit Euler from `u0` with time step `dt` up to `t_end`.
 *
 * # Safety
 * `u0` must point to `n` values; `w` must be live; `out` must be valid.
 */
enum SfStatus sf_evolve(const double *u0,
                        size_t n,
                        const struct SfNonlinearity *w,
                        double gamma,
                        double dt,
                        double t_end,
                        bool stop_at_extinction,
                        struct SfEvolution **out);

/**
 * Number of records, the initial one included.
 *
 * # Safety
 * `ev` must be a live handle.
 */
size_t sf_evolution_len(const struct SfEvolution *ev);

/**
 * # Safety
 * `ev` must be live; `record` must be valid.
 */
enum SfStatus sf_evolution_record(const struct SfEvolution *ev,
                                  size_t k,
                                  struct SfStepRecord *record);

/**
 * Copies the last state into `out`.
 *
 * # Safety
 * `ev` must be live; `out` must hold `capacity` values.
 */
enum SfStatus sf_evolution_final_state(const struct SfEvolution *ev, double *out, size_t capacity);

/**
 * First time `‖u - ū‖` fell below the extinction tolerance; returns
 * [`SfStatus::NotExtinct`] if it never did.
 *
 * # Safety
 * `ev` must be live; `t` must be valid.
 */
enum SfStatus sf_evolution_extinction_time(const struct SfEvolution *ev, double *t);

/**
 * The bound `C_p‖u_0 - ū‖/α`; [`SfStatus::NotApplicable`] when `α = 0`.
 *
 * # Safety
 * `ev` must be live; `bound` must be valid.
 */
enum SfStatus sf_evolution_extinction_bound(const struct SfEvolution *ev, double *bound);

/**
 * # Safety
 * `ev` must be null or a handle not yet freed.
 */
void sf_evolution_free(struct SfEvolution *ev);

/**
 * Builds `Φ` from gradient samples with quadrature weight `dx`, using
 * `levels` budgets `2^{-k}` and the default shift radius.
 *
 * # Safety
 * `samples` must point to `len` values; `out` must be valid.
 */
enum SfStatus sf_orlicz_build(const double *samples,
                              size_t len,
                              double dx,
                              size_t levels,
                              struct SfOrlicz **out);

/**
 * `Φ(p)`.
 *
 * # Safety
 * `phi` must be live; `value` must be valid.
 */
enum SfStatus sf_orlicz_eval(const struct SfOrlicz *phi, double p, double *value);

/**
 * `G = dx·Σ Φ(g_i)`.
 *
 * # Safety
 * `phi` must be live; `samples` must point to `len` values.
 */
enum SfStatus sf_orlicz_modulus(const struct SfOrlicz *phi,
                                const double *samples,
                                size_t len,
                                double dx,
                                double *value);

/**
 * JSON record `{levels, slopes, delta}`; release with [`sf_string_free`].
 *
 * # Safety
 * `phi` must be live; `out` must be valid.
 */
enum SfStatus sf_orlicz_to_json(const struct SfOrlicz *phi, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void sf_string_free(char *s);

/**
 * # Safety
 * `phi` must be null or a handle not yet freed.
 */
void sf_orlicz_free(struct SfOrlicz *phi);

/**
 * Re-runs the checks on a stored `report.json` or run directory and sets
 * `passed` to whether every applicable verdict holds.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `passed` must be valid.
 */
enum SfStatus sf_verify_report_json(const char *path, bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SINGFLOW_H */
