#ifndef ISOFLOW_H
#define ISOFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IsoStatus {
  ISO_STATUS_OK = 0,
  ISO_STATUS_NULL_POINTER = 1,
  ISO_STATUS_INVALID_INPUT = 2,
  // The flow function is undefined somewhere on the spectrum.
  ISO_STATUS_DOMAIN = 3,
  // Outside a factorization or chart domain.
  ISO_STATUS_NOT_IN_DOMAIN = 4,
  ISO_STATUS_DEGENERATE = 5,
  ISO_STATUS_CONVERGENCE = 6,
  ISO_STATUS_NUMERICAL = 7,
  ISO_STATUS_CONSISTENCY = 8,
  ISO_STATUS_PANIC = 9,
} IsoStatus;

typedef enum IsoStepMethod {
  ISO_STEP_METHOD_GEOMETRIC = 0,
  ISO_STEP_METHOD_MOSER_VESELOV = 1,
} IsoStepMethod;

// Opaque billiard table.
typedef struct IsoEllipsoid IsoEllipsoid;

// Opaque dense square matrix.
typedef struct IsoMatrix IsoMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL after a
// successful call. Valid until the next call on the same thread.
const char *isoflow_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *isoflow_version(void);

// Copies an `n × n` row-major array into a new handle.
//
// # Safety
// `data` must point to `n * n` doubles and `out` to writable storage.
enum IsoStatus isoflow_matrix_new(size_t n, const double *data, struct IsoMatrix **out);

// Releases a handle. NULL is ignored.
//
// # Safety
// `m` must come from this library and not have been freed.
void isoflow_matrix_free(struct IsoMatrix *m);

// Dimension of the matrix, 0 for NULL.
//
// # Safety
// `m` must be NULL or a live handle.
size_t isoflow_matrix_dim(const struct IsoMatrix *m);

// Copies the entries row-major into `data`, which holds `len` doubles;
// `len` must equal `n * n`.
//
// # Safety
// `m` must be a live handle and `data` must hold `len` doubles.
enum IsoStatus isoflow_matrix_read(const struct IsoMatrix *m, double *data, size_t len);

// Ascending eigenvalues of a symmetric matrix into `values` (length `n`).
//
// # Safety
// `m` must be a live handle and `values` must hold `n` doubles.
enum IsoStatus isoflow_eigenvalues(const struct IsoMatrix *m, double *values);

// Solves the flow `T' = [T, Π_sk f(T)]` at time `t` by factorization.
// `f` is `identity`, `log`, `poly:c0,c1,...` or `shiftlog:s`.
//
// # Safety
// `s0` must be a live handle, `f` a NUL-terminated string and `out`
// writable. The new handle must be released with `isoflow_matrix_free`.
enum IsoStatus isoflow_symes_solve(const struct IsoMatrix *s0,
                                   const char *f,
                                   double t,
                                   struct IsoMatrix **out);

// Integrates the same flow numerically to time `t` with local tolerance `tol`.
//
// # Safety
// As for [`isoflow_symes_solve`].
enum IsoStatus isoflow_integrate(const struct IsoMatrix *s0,
                                 const char *f,
                                 double t,
                                 double tol,
                                 struct IsoMatrix **out);

// Shifted QR iteration with deflation on a tridiagonal matrix.
// `strategy` is `none`, `rayleigh`, `wilkinson` or `fixed:s`.
// Writes ascending eigenvalue estimates to `eigenvalues` (length `n`), the
// number of steps taken and whether every eigenvalue deflated. A run that
// stops early still returns `ISO_STATUS_OK` with `converged` false.
//
// # Safety
// `a`, `b` must hold `n` and `n - 1` doubles; outputs must be writable.
enum IsoStatus isoflow_qr_iterate(const double *a,
                                  const double *b,
                                  size_t n,
                                  const char *strategy,
                                  double deflation_tol,
                                  size_t max_steps,
                                  double *eigenvalues,
                                  size_t *steps,
                                  bool *converged);

// Ascending eigenvalues and positive unit norming constants of a Jacobi
// matrix (all `b > 0`).
//
// # Safety
// `a`, `b` must hold `n` and `n - 1` doubles; `lambdas`, `v` hold `n`.
enum IsoStatus isoflow_norming_constants(const double *a,
                                         const double *b,
                                         size_t n,
                                         double *lambdas,
                                         double *v);

// The Jacobi matrix with the given spectrum and norming constants.
// `lambdas` must be strictly increasing; `v` positive, rescaled to unit norm.
//
// # Safety
// `lambdas`, `v`, `a_out` hold `n` doubles, `b_out` holds `n - 1`.
enum IsoStatus isoflow_reconstruct(const double *lambdas,
                                   const double *v,
                                   size_t n,
                                   double *a_out,
                                   double *b_out);

// Bidiagonal coordinates of a tridiagonal matrix in the chart of the
// permutation `pi` (0-based, length `n`). Writes the ascending spectrum
// to `lambdas` and the `n - 1` chart coordinates to `betas`.
//
// # Safety
// `a`, `pi`, `lambdas` hold `n` entries; `b`, `betas` hold `n - 1`.
enum IsoStatus isoflow_to_chart(const double *a,
                                const double *b,
                                size_t n,
                                const size_t *pi,
                                double *lambdas,
                                double *betas);

// Inverse of [`isoflow_to_chart`].
//
// # Safety
// `lambdas`, `pi`, `a_out` hold `n` entries; `betas`, `b_out` hold `n - 1`.
enum IsoStatus isoflow_from_chart(const double *lambdas,
                                  const size_t *pi,
                                  const double *betas,
                                  size_t n,
                                  double *a_out,
                                  double *b_out);

// Ellipsoid `{x : |C⁻¹x| = 1}` for a symmetric positive definite `C`
// given row-major.
//
// # Safety
// `c` must hold `n * n` doubles and `out` must be writable.
enum IsoStatus isoflow_ellipsoid_new(size_t n, const double *c, struct IsoEllipsoid **out);

// Releases an ellipsoid. NULL is ignored.
//
// # Safety
// `e` must come from this library and not have been freed.
void isoflow_ellipsoid_free(struct IsoEllipsoid *e);

// One bounce from boundary point `x` with inward unit direction `y`.
// Writes the next hit point and direction.
//
// # Safety
// `e` must be a live handle; every array holds `n` doubles, `n` being the
// ellipsoid dimension.
enum IsoStatus isoflow_billiard_step(const struct IsoEllipsoid *e,
                                     enum IsoStepMethod method,
                                     const double *x,
                                     const double *y,
                                     double *x_out,
                                     double *y_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISOFLOW_H */
