#ifndef EIGENCROFTON_H
#define EIGENCROFTON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EcStatus {
  EC_STATUS_OK = 0,
  EC_STATUS_NULL_POINTER = 1,
  EC_STATUS_INVALID_ARGUMENT = 2,
  EC_STATUS_EIGENVALUE_COLLISION = 3,
  EC_STATUS_CONSTANCY_VIOLATION = 4,
  EC_STATUS_NOT_ISOTROPY_IRREDUCIBLE = 5,
  EC_STATUS_COVERING_DEGREE = 6,
  EC_STATUS_DEGENERATE_FRAME = 7,
  EC_STATUS_NON_CONVERGENT = 8,
  EC_STATUS_TOO_MANY_UNCERTIFIED = 9,
  EC_STATUS_UNEXPECTED_INFINITE = 10,
  EC_STATUS_DEGENERATE_NONZERO = 11,
  EC_STATUS_AMBIGUOUS = 12,
  EC_STATUS_MESH_FORMAT = 13,
  EC_STATUS_CONFIG = 14,
  EC_STATUS_IO = 15,
  EC_STATUS_PANIC = 16,
} EcStatus;

typedef enum EcVerdict {
  EC_VERDICT_EQUALITY_CONFIRMED = 0,
  EC_VERDICT_STRICT_INEQUALITY_CONFIRMED = 1,
  EC_VERDICT_BOUND_VIOLATED = 2,
  EC_VERDICT_INCONCLUSIVE = 3,
} EcVerdict;

/**
 * Opaque eigenbasis handle.
 */
typedef struct EcBasis EcBasis;

/**
 * Opaque spherical mesh handle.
 */
typedef struct EcMesh EcMesh;

/**
 * Torus frequency orbit policy: 0 single orbit, 1 merged, 2 strict.
 */
typedef int32_t EcPolicy;

/**
 * Summary of a Monte Carlo run.
 */
typedef struct EcReport {
  double estimate;
  /**
   * Standard error of the estimate.
   */
  double std_error;
  double theory;
  double bound;
  size_t trials;
  size_t certified;
  size_t uncertified;
  enum EcVerdict verdict;
  /**
   * 1 when the estimate agrees with the theoretical value.
   */
  int32_t consistent;
} EcReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ec_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t ec_last_error_message(char *buf, size_t len);

/**
 * Basis {cos lθ, sin lθ}/√π on the unit circle.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum EcStatus ec_basis_circle_new(size_t l, struct EcBasis **out);

/**
 * Real orthonormal spherical harmonics of degree l on S².
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum EcStatus ec_basis_sphere2_new(size_t l, struct EcBasis **out);

/**
 * Flat torus R²/(p1 Z × p2 Z) eigenbasis for the orbit of (k1, k2).
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum EcStatus ec_basis_torus_new(double p1,
                                 double p2,
                                 int64_t k1,
                                 int64_t k2,
                                 EcPolicy policy,
                                 struct EcBasis **out);

/**
 * Releases a basis; null is ignored.
 *
 * # Safety
 * `basis` must come from an `ec_basis_*_new` call and not be used afterwards.
 */
void ec_basis_free(struct EcBasis *basis);

/**
 * Number of basis functions N; 0 for a null handle.
 *
 * # Safety
 * `basis` must be null or a live handle.
 */
size_t ec_basis_dim(const struct EcBasis *basis);

/**
 * Eigenvalue λ; NaN for a null handle.
 *
 * # Safety
 * `basis` must be null or a live handle.
 */
double ec_basis_lambda(const struct EcBasis *basis);

/**
 * Evaluates all basis functions at a point. Coordinates: one angle on the
 * circle, a unit 3-vector on S², (x, y) on the torus.
 *
 * # Safety
 * `coords` must be valid for `ncoords` reads and `values` for `nvalues` writes.
 */
enum EcStatus ec_basis_eval(const struct EcBasis *basis,
                            const double *coords,
                            size_t ncoords,
                            double *values,
                            size_t nvalues);

/**
 * Closed-form average zero count (2/σₙ)·√(β₁⋯βₙ)·vol M.
 *
 * # Safety
 * `basis` must be a live handle and `out` valid for one write.
 */
enum EcStatus ec_predicted_average(const struct EcBasis *basis, double *out);

/**
 * Upper bound c(n)·λ^{n/2}·vol M.
 *
 * # Safety
 * `basis` must be a live handle and `out` valid for one write.
 */
enum EcStatus ec_weyl_bound(const struct EcBasis *basis, double *out);

/**
 * Monte Carlo average of the number of common zeros of n random elements.
 * `threads` = 0 uses the default worker count.
 *
 * # Safety
 * `basis` must be a live handle and `out` valid for one write.
 */
enum EcStatus ec_run_zero_average(const struct EcBasis *basis,
                                  size_t trials,
                                  uint64_t seed,
                                  size_t threads,
                                  struct EcReport *out);

/**
 * Reads a mesh file (`N m` header, `v` and `c` records).
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for one write.
 */
enum EcStatus ec_mesh_read(const char *path, struct EcMesh **out);

/**
 * Releases a mesh; null is ignored.
 *
 * # Safety
 * `mesh` must come from `ec_mesh_read` and not be used afterwards.
 */
void ec_mesh_free(struct EcMesh *mesh);

/**
 * Total volume of a mesh (arc length or area); NaN for null.
 *
 * # Safety
 * `mesh` must be null or a live handle.
 */
double ec_mesh_volume(const struct EcMesh *mesh);

/**
 * Haar average of the number of intersections with rotated great subspheres.
 *
 * # Safety
 * `mesh` must be a live handle and `out` valid for one write.
 */
enum EcStatus ec_crofton_average(const struct EcMesh *mesh,
                                 size_t trials,
                                 uint64_t seed,
                                 size_t threads,
                                 struct EcReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EIGENCROFTON_H */
