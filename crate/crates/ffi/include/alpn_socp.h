#ifndef ALPN_SOCP_H
#define ALPN_SOCP_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum AlpnErrorCode {
  ALPN_ERROR_CODE_OK = 0,
  ALPN_ERROR_CODE_NULL_POINTER = 1,
  ALPN_ERROR_CODE_INVALID_ARGUMENT = 2,
  ALPN_ERROR_CODE_IO = 3,
  ALPN_ERROR_CODE_PARSE = 4,
  ALPN_ERROR_CODE_NUMERICAL = 5,
  ALPN_ERROR_CODE_NO_CERTIFICATE = 6,
  ALPN_ERROR_CODE_PANIC = 7,
} AlpnErrorCode;

/**
 * Termination status of a solve.
 */
typedef enum AlpnSolveStatus {
  ALPN_SOLVE_STATUS_OPTIMAL = 0,
  ALPN_SOLVE_STATUS_RELAXATION_UNBOUNDED = 1,
  ALPN_SOLVE_STATUS_DUAL_UNBOUNDED = 2,
  ALPN_SOLVE_STATUS_ITERATION_LIMIT = 3,
  ALPN_SOLVE_STATUS_NUMERICAL_FAILURE = 4,
} AlpnSolveStatus;

/**
 * Opaque problem instance.
 */
typedef struct AlpnInstance AlpnInstance;

/**
 * Opaque solve result.
 */
typedef struct AlpnReport AlpnReport;

/**
 * Solver settings. Start from [`alpn_params_default`].
 */
typedef struct AlpnParams {
  double tol_feas;
  double tol_qp;
  double tol_lin;
  /**
   * 0 selects the default cap.
   */
  size_t max_outer_iterations;
  /**
   * Used only when `has_gamma0` is nonzero.
   */
  double gamma0;
  int32_t has_gamma0;
} AlpnParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null. The string
 * stays valid until the next failing call on the same thread.
 */
const char *alpn_last_error_message(void);

struct AlpnParams alpn_params_default(void);

/**
 * Builds an instance from a row-major `m x n` matrix `a`, `b` of length
 * `m`, `c` of length `n` and `p` block sizes summing to `n`.
 *
 * # Safety
 * Every pointer must be valid for the stated number of elements.
 */
enum AlpnErrorCode alpn_instance_new(size_t m,
                                     size_t n,
                                     const double *a,
                                     const double *b,
                                     const double *c,
                                     const size_t *dims,
                                     size_t p,
                                     struct AlpnInstance **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AlpnErrorCode alpn_instance_read(const char *path, struct AlpnInstance **out);

/**
 * # Safety
 * `instance` must come from this library and `path` be NUL-terminated.
 */
enum AlpnErrorCode alpn_instance_write(const struct AlpnInstance *instance, const char *path);

/**
 * Random instance with `m` rows and `p` blocks, deterministic in `seed`.
 *
 * # Safety
 * `dims` must hold `p` elements and `out` be a valid pointer.
 */
enum AlpnErrorCode alpn_instance_generate(size_t m,
                                          const size_t *dims,
                                          size_t p,
                                          uint64_t seed,
                                          struct AlpnInstance **out);

/**
 * Number of equality constraints, or 0 for a null handle.
 *
 * # Safety
 * `instance` must be null or come from this library.
 */
size_t alpn_instance_m(const struct AlpnInstance *instance);

/**
 * Number of variables, or 0 for a null handle.
 *
 * # Safety
 * `instance` must be null or come from this library.
 */
size_t alpn_instance_n(const struct AlpnInstance *instance);

/**
 * # Safety
 * `instance` must be null or come from this library and not be used again.
 */
void alpn_instance_free(struct AlpnInstance *instance);

/**
 * Solves `instance`. `params` may be null for defaults. A report is produced
 * for every termination status, so check [`alpn_report_status`].
 *
 * # Safety
 * Handles must come from this library and `out` be a valid pointer.
 */
enum AlpnErrorCode alpn_solve(const struct AlpnInstance *instance,
                              const struct AlpnParams *params,
                              struct AlpnReport **out);

/**
 * # Safety
 * `report` must be a valid handle and `status` a valid pointer.
 */
enum AlpnErrorCode alpn_report_status(const struct AlpnReport *report,
                                      enum AlpnSolveStatus *status);

/**
 * Objective `c'x`, or NaN for a null handle.
 *
 * # Safety
 * `report` must be null or a valid handle.
 */
double alpn_report_objective(const struct AlpnReport *report);

/**
 * Outer iterations performed, or 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a valid handle.
 */
size_t alpn_report_iterations(const struct AlpnReport *report);

/**
 * Initial and final hyperplane counts of the outer approximation.
 *
 * # Safety
 * `report` must be a valid handle; the outputs must be valid pointers.
 */
enum AlpnErrorCode alpn_report_hyperplanes(const struct AlpnReport *report,
                                           size_t *initial,
                                           size_t *final_);

/**
 * Copies the primal point into `buf`, which must hold exactly `n` values.
 *
 * # Safety
 * `report` must be a valid handle and `buf` valid for `len` writes.
 */
enum AlpnErrorCode alpn_report_x(const struct AlpnReport *report, double *buf, size_t len);

/**
 * Copies the dual multipliers into `buf` (exactly `m` values). Fails with
 * `NoCertificate` when the solve produced none.
 *
 * # Safety
 * `report` must be a valid handle and `buf` valid for `len` writes.
 */
enum AlpnErrorCode alpn_report_y(const struct AlpnReport *report, double *buf, size_t len);

/**
 * Writes the report; `csv_log` nonzero selects the iteration log format.
 *
 * # Safety
 * `report` must be a valid handle and `path` NUL-terminated.
 */
enum AlpnErrorCode alpn_report_write(const struct AlpnReport *report,
                                     const char *path,
                                     int32_t csv_log);

/**
 * # Safety
 * `report` must be null or come from this library and not be used again.
 */
void alpn_report_free(struct AlpnReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ALPN_SOCP_H */
