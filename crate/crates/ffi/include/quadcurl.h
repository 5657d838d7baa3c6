#ifndef QUADCURL_H
#define QUADCURL_H

#include <stddef.h>
#include <stdint.h>

// Result codes of every fallible function.
typedef enum QcStatus {
  QC_STATUS_OK = 0,
  // A required pointer argument was null.
  QC_STATUS_NULL_POINTER = 1,
  QC_STATUS_INVALID_ARGUMENT = 2,
  // The mesh could not be read or is not a valid conforming mesh.
  QC_STATUS_MESH = 3,
  // Assembly or a solver failed, or too few eigenvalues exist.
  QC_STATUS_NUMERICAL = 4,
  // An index or buffer length is out of range.
  QC_STATUS_OUT_OF_RANGE = 5,
  QC_STATUS_PANIC = 6,
} QcStatus;

// Eigenpairs returned by [`qc_quadcurl_eig`] or [`qc_maxwell_eig`].
typedef struct QcEigenSolution QcEigenSolution;

// Tetrahedral mesh with its topology.
typedef struct QcMesh QcMesh;

// Assembled quad-curl pencil on a mesh for a fixed polynomial order.
typedef struct QcPencil QcPencil;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *qc_last_error(void);

// Static description of a status code.
const char *qc_status_string(enum QcStatus status);

// Library version as a static NUL-terminated string.
const char *qc_version(void);

// Structured mesh of the unit cube with `n` subdivisions per axis.
//
// # Safety
// `out` must be a valid pointer; on success it receives a handle to be
// released with [`qc_mesh_free`].
enum QcStatus qc_mesh_cube(size_t n, struct QcMesh **out);

// Mesh from raw arrays: `num_vertices` xyz triples and `num_tets` groups of
// four zero-based vertex indices.
//
// # Safety
// `coords` must point to `3 * num_vertices` doubles, `tets` to
// `4 * num_tets` indices, and `out` must be valid.
enum QcStatus qc_mesh_from_arrays(const double *coords,
                                  size_t num_vertices,
                                  const size_t *tets,
                                  size_t num_tets,
                                  struct QcMesh **out);

// Reads an ASCII Gmsh 2.2 file; only 4-node tetrahedra are used.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum QcStatus qc_mesh_read_gmsh(const char *path, struct QcMesh **out);

// # Safety
// `mesh` must be null or a handle from a `qc_mesh_*` constructor that has
// not been freed.
void qc_mesh_free(struct QcMesh *mesh);

// Vertex and tetrahedron counts.
//
// # Safety
// `mesh` must be a live handle; the output pointers may be null.
enum QcStatus qc_mesh_counts(const struct QcMesh *mesh, size_t *num_vertices, size_t *num_tets);

// Assembles the quad-curl pencil of order `order` (1 or 2) on `mesh`.
//
// # Safety
// `mesh` must be a live handle and `out` a valid pointer.
enum QcStatus qc_pencil_new(const struct QcMesh *mesh, uint32_t order, struct QcPencil **out);

// # Safety
// `pencil` must be null or a live handle from [`qc_pencil_new`].
void qc_pencil_free(struct QcPencil *pencil);

// Space dimensions: `n` interior edge DoFs, `m` edge DoFs, `p` interior
// nodal DoFs.
//
// # Safety
// `pencil` must be a live handle; the output pointers may be null.
enum QcStatus qc_pencil_dims(const struct QcPencil *pencil, size_t *n, size_t *m, size_t *p);

// First `count` nonzero quad-curl eigenpairs of `pencil`.
//
// # Safety
// `pencil` must be a live handle and `out` a valid pointer.
enum QcStatus qc_quadcurl_eig(const struct QcPencil *pencil,
                              size_t count,
                              double zero_tol,
                              struct QcEigenSolution **out);

// First `count` nonzero Maxwell eigenpairs on `mesh` with order `order`.
//
// # Safety
// `mesh` must be a live handle and `out` a valid pointer.
enum QcStatus qc_maxwell_eig(const struct QcMesh *mesh,
                             uint32_t order,
                             size_t count,
                             double zero_tol,
                             struct QcEigenSolution **out);

// # Safety
// `sol` must be null or a live handle.
void qc_solution_free(struct QcEigenSolution *sol);

// Number of returned eigenpairs; 0 for a null handle.
//
// # Safety
// `sol` must be null or a live handle.
size_t qc_solution_len(const struct QcEigenSolution *sol);

// Length of each eigenvector (`N`, the interior edge DoF count).
//
// # Safety
// `sol` must be null or a live handle.
size_t qc_solution_vector_len(const struct QcEigenSolution *sol);

// Eigenvalue `index` with its pencil residual and discrete divergence
// residual. Output pointers other than `value` may be null.
//
// # Safety
// `sol` must be a live handle and `value` a valid pointer.
enum QcStatus qc_solution_eigenvalue(const struct QcEigenSolution *sol,
                                     size_t index,
                                     double *value,
                                     double *residual,
                                     double *divergence_residual);

// Copies eigenvector `index` into `buf`, which must hold
// [`qc_solution_vector_len`] doubles.
//
// # Safety
// `sol` must be a live handle and `buf` valid for `len` writes.
enum QcStatus qc_solution_vector(const struct QcEigenSolution *sol,
                                 size_t index,
                                 double *buf,
                                 size_t len);

// Number of eigenvalues classified as zero, when the dense path computed
// the whole spectrum. Returns `QC_STATUS_OUT_OF_RANGE` otherwise.
//
// # Safety
// `sol` must be a live handle and `count` a valid pointer.
enum QcStatus qc_solution_zero_count(const struct QcEigenSolution *sol, size_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUADCURL_H */
