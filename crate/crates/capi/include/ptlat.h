#ifndef PTLAT_H
#define PTLAT_H

/* Generated by cbindgen from the ptlat-capi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Definiteness classification of an assembled metric candidate.
 */
typedef enum PtPositivity {
  PT_POSITIVITY_POSITIVE_DEFINITE = 0,
  PT_POSITIVITY_INDEFINITE = 1,
  PT_POSITIVITY_SINGULAR = 2,
} PtPositivity;

/**
 * Status code returned by every fallible function in this library.
 */
typedef enum PtStatus {
  /**
   * The call succeeded.
   */
  PT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PT_STATUS_NULL_POINTER = 1,
  /**
   * An argument was out of range or a buffer had the wrong length.
   */
  PT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The computation failed (degenerate spectrum, no convergence, ...).
   */
  PT_STATUS_NUMERICAL_FAILURE = 3,
} PtStatus;

/**
 * Opaque handle to a lattice member.
 */
typedef struct PtHamiltonian PtHamiltonian;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a lattice member with `n` sites and the given couplings.
 *
 * `couplings` points to `depth` values; `depth` may be 0 (plain Laplacian),
 * in which case `couplings` may be null. On success `*out` receives a handle
 * that must be released with [`pt_hamiltonian_free`].
 *
 * # Safety
 *
 * `couplings` must be valid for reads of `depth` doubles when `depth > 0`,
 * and `out` must be a valid writable pointer.
 */
enum PtStatus pt_hamiltonian_new(uintptr_t n,
                                 const double *couplings,
                                 uintptr_t depth,
                                 struct PtHamiltonian **out);

/**
 * Release a handle created by [`pt_hamiltonian_new`]. Null is a no-op.
 *
 * # Safety
 *
 * `handle` must be null or a pointer previously returned by
 * [`pt_hamiltonian_new`] that has not already been freed.
 */
void pt_hamiltonian_free(struct PtHamiltonian *handle);

/**
 * Write the number of lattice sites to `*out`.
 *
 * # Safety
 *
 * `handle` must be a live handle and `out` a valid writable pointer.
 */
enum PtStatus pt_hamiltonian_size(const struct PtHamiltonian *handle, uintptr_t *out);

/**
 * Copy the dense matrix into `out` in row-major order; `len` must be `n*n`.
 *
 * # Safety
 *
 * `handle` must be a live handle and `out` valid for writes of `len` doubles.
 */
enum PtStatus pt_hamiltonian_dense(const struct PtHamiltonian *handle, double *out, uintptr_t len);

/**
 * Compute the spectrum; eigenvalues are sorted by real part, then imaginary.
 *
 * `re_out` and `im_out` must each hold `len == n` doubles. If `real_count`
 * is non-null it receives the number of eigenvalues whose imaginary part is
 * within `tol_real` of zero (pass a non-positive `tol_real` for the
 * default tolerance).
 *
 * # Safety
 *
 * `handle` must be a live handle; `re_out` and `im_out` must be valid for
 * writes of `len` doubles; `real_count` must be null or writable.
 */
enum PtStatus pt_spectrum(const struct PtHamiltonian *handle,
                          double tol_real,
                          double *re_out,
                          double *im_out,
                          uintptr_t len,
                          uintptr_t *real_count);

/**
 * Solve the banded intertwiner ansatz with band index `band` (1-based,
 * `1 <= band <= n`) and copy the normalized solution into `out` (row-major,
 * `len == n*n`).
 *
 * # Safety
 *
 * `handle` must be a live handle and `out` valid for writes of `len` doubles.
 */
enum PtStatus pt_banded_pseudometric(const struct PtHamiltonian *handle,
                                     uintptr_t band,
                                     double *out,
                                     uintptr_t len);

/**
 * Assemble a metric candidate from the rank-one basis.
 *
 * `coefficients` may be null (all ones) or point to `coeffs_len == n`
 * values. The candidate matrix is copied row-major into `theta_out`
 * (`theta_len == n*n`); `min_eigenvalue` and `positivity` are optional
 * outputs (null to skip).
 *
 * # Safety
 *
 * `handle` must be a live handle; `coefficients` must be null or valid for
 * reads of `coeffs_len` doubles; `theta_out` must be valid for writes of
 * `theta_len` doubles; `min_eigenvalue` and `positivity` must each be null
 * or writable.
 */
enum PtStatus pt_metric(const struct PtHamiltonian *handle,
                        const double *coefficients,
                        uintptr_t coeffs_len,
                        double *theta_out,
                        uintptr_t theta_len,
                        double *min_eigenvalue,
                        enum PtPositivity *positivity);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pt_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PTLAT_H */
