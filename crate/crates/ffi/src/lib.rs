//! C interface to the quadcurl eigenvalue solvers.
//!
//! Objects are exposed as opaque handles created by `qc_*_new`-style
//! functions and released with the matching `qc_*_free`. Every fallible call
//! returns a [`QcStatus`]; on failure a description is available from
//! [`qc_last_error`] until the next failing call on the same thread.
//! Panics never cross the boundary: they are reported as `QC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use quadcurl_core::harness::{HarnessError, MeshSpec};
use quadcurl_core::mesh::{Mesh, MeshData, MeshError, Point};
use quadcurl_core::systems::{
    solve_maxwell_eig, solve_quadcurl_eig, EigenOptions, EigenSolution, Operators, PencilSystem,
    SystemError,
};

/// Result codes of every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    InvalidArgument = 2,
    /// The mesh could not be read or is not a valid conforming mesh.
    Mesh = 3,
    /// Assembly or a solver failed, or too few eigenvalues exist.
    Numerical = 4,
    /// An index or buffer length is out of range.
    OutOfRange = 5,
    Panic = 6,
}

/// Tetrahedral mesh with its topology.
pub struct QcMesh {
    data: Arc<MeshData>,
}

/// Assembled quad-curl pencil on a mesh for a fixed polynomial order.
pub struct QcPencil {
    pencil: PencilSystem,
}

/// Eigenpairs returned by [`qc_quadcurl_eig`] or [`qc_maxwell_eig`].
pub struct QcEigenSolution {
    sol: EigenSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: QcStatus, msg: impl Into<String>) -> QcStatus {
    set_error(msg);
    status
}

fn system_status(e: &SystemError) -> QcStatus {
    match e {
        SystemError::InvalidArgument(_) => QcStatus::InvalidArgument,
        _ => QcStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> QcStatus) -> QcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(QcStatus::Panic, format!("panic: {msg}"))
        }
    }
}

/// Stores `value` behind `out`.
///
/// # Safety
/// `out` must be valid for a pointer write.
unsafe fn emit<T>(out: *mut *mut T, value: T) -> QcStatus {
    *out = Box::into_raw(Box::new(value));
    QcStatus::Ok
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn qc_status_string(status: QcStatus) -> *const c_char {
    let s: &'static CStr = match status {
        QcStatus::Ok => c"ok",
        QcStatus::NullPointer => c"null pointer argument",
        QcStatus::InvalidArgument => c"invalid argument",
        QcStatus::Mesh => c"invalid mesh",
        QcStatus::Numerical => c"numerical failure",
        QcStatus::OutOfRange => c"index or length out of range",
        QcStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Structured mesh of the unit cube with `n` subdivisions per axis.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle to be
/// released with [`qc_mesh_free`].
#[no_mangle]
pub unsafe extern "C" fn qc_mesh_cube(n: usize, out: *mut *mut QcMesh) -> QcStatus {
    guard(|| {
        if out.is_null() {
            return fail(QcStatus::NullPointer, "out is null");
        }
        match MeshData::cube(n) {
            Ok(data) => emit(out, QcMesh { data }),
            Err(e @ MeshError::InvalidSubdivision(_)) => {
                fail(QcStatus::InvalidArgument, e.to_string())
            }
            Err(e) => fail(QcStatus::Mesh, e.to_string()),
        }
    })
}

/// Mesh from raw arrays: `num_vertices` xyz triples and `num_tets` groups of
/// four zero-based vertex indices.
///
/// # Safety
/// `coords` must point to `3 * num_vertices` doubles, `tets` to
/// `4 * num_tets` indices, and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qc_mesh_from_arrays(
    coords: *const f64,
    num_vertices: usize,
    tets: *const usize,
    num_tets: usize,
    out: *mut *mut QcMesh,
) -> QcStatus {
    guard(|| {
        if coords.is_null() || tets.is_null() || out.is_null() {
            return fail(
                QcStatus::NullPointer,
                "coords, tets and out must be non-null",
            );
        }
        let c = std::slice::from_raw_parts(coords, 3 * num_vertices);
        let t = std::slice::from_raw_parts(tets, 4 * num_tets);
        let vertices = c
            .chunks_exact(3)
            .map(|p| Point::new(p[0], p[1], p[2]))
            .collect();
        let cells = t
            .chunks_exact(4)
            .map(|q| [q[0], q[1], q[2], q[3]])
            .collect();
        match Mesh::new(vertices, cells).and_then(MeshData::new) {
            Ok(data) => emit(out, QcMesh { data }),
            Err(e) => fail(QcStatus::Mesh, e.to_string()),
        }
    })
}

/// Reads an ASCII Gmsh 2.2 file; only 4-node tetrahedra are used.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qc_mesh_read_gmsh(path: *const c_char, out: *mut *mut QcMesh) -> QcStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(QcStatus::NullPointer, "path and out must be non-null");
        }
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(QcStatus::InvalidArgument, "path is not valid UTF-8");
        };
        match MeshSpec::File(path.to_string()).load() {
            Ok(data) => emit(out, QcMesh { data }),
            Err(
                e @ (HarnessError::MeshFile { .. } | HarnessError::Gmsh(_) | HarnessError::Mesh(_)),
            ) => fail(QcStatus::Mesh, e.to_string()),
            Err(e) => fail(QcStatus::Numerical, e.to_string()),
        }
    })
}

/// # Safety
/// `mesh` must be null or a handle from a `qc_mesh_*` constructor that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn qc_mesh_free(mesh: *mut QcMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Vertex and tetrahedron counts.
///
/// # Safety
/// `mesh` must be a live handle; the output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn qc_mesh_counts(
    mesh: *const QcMesh,
    num_vertices: *mut usize,
    num_tets: *mut usize,
) -> QcStatus {
    guard(|| {
        let Some(m) = mesh.as_ref() else {
            return fail(QcStatus::NullPointer, "mesh is null");
        };
        if let Some(v) = num_vertices.as_mut() {
            *v = m.data.mesh.num_vertices();
        }
        if let Some(t) = num_tets.as_mut() {
            *t = m.data.mesh.num_tets();
        }
        QcStatus::Ok
    })
}

/// Assembles the quad-curl pencil of order `order` (1 or 2) on `mesh`.
///
/// # Safety
/// `mesh` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qc_pencil_new(
    mesh: *const QcMesh,
    order: u32,
    out: *mut *mut QcPencil,
) -> QcStatus {
    guard(|| {
        let Some(m) = mesh.as_ref() else {
            return fail(QcStatus::NullPointer, "mesh is null");
        };
        if out.is_null() {
            return fail(QcStatus::NullPointer, "out is null");
        }
        if !(1..=2).contains(&order) {
            return fail(
                QcStatus::InvalidArgument,
                format!("order must be 1 or 2, got {order}"),
            );
        }
        match PencilSystem::new(&m.data, order as usize) {
            Ok(pencil) => emit(out, QcPencil { pencil }),
            Err(e) => fail(system_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `pencil` must be null or a live handle from [`qc_pencil_new`].
#[no_mangle]
pub unsafe extern "C" fn qc_pencil_free(pencil: *mut QcPencil) {
    if !pencil.is_null() {
        drop(Box::from_raw(pencil));
    }
}

/// Space dimensions: `n` interior edge DoFs, `m` edge DoFs, `p` interior
/// nodal DoFs.
///
/// # Safety
/// `pencil` must be a live handle; the output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn qc_pencil_dims(
    pencil: *const QcPencil,
    n: *mut usize,
    m: *mut usize,
    p: *mut usize,
) -> QcStatus {
    guard(|| {
        let Some(pc) = pencil.as_ref() else {
            return fail(QcStatus::NullPointer, "pencil is null");
        };
        let s = &pc.pencil.ops.spaces;
        for (ptr, v) in [(n, s.n()), (m, s.m()), (p, s.p())] {
            if let Some(x) = ptr.as_mut() {
                *x = v;
            }
        }
        QcStatus::Ok
    })
}

fn options(zero_tol: f64) -> Result<EigenOptions, QcStatus> {
    if !(zero_tol.is_finite() && zero_tol > 0.0 && zero_tol < 1.0) {
        return Err(fail(
            QcStatus::InvalidArgument,
            format!("zero_tol must lie in (0, 1), got {zero_tol}"),
        ));
    }
    Ok(EigenOptions {
        zero_tol,
        ..EigenOptions::default()
    })
}

/// First `count` nonzero quad-curl eigenpairs of `pencil`.
///
/// # Safety
/// `pencil` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qc_quadcurl_eig(
    pencil: *const QcPencil,
    count: usize,
    zero_tol: f64,
    out: *mut *mut QcEigenSolution,
) -> QcStatus {
    guard(|| {
        let Some(pc) = pencil.as_ref() else {
            return fail(QcStatus::NullPointer, "pencil is null");
        };
        if out.is_null() {
            return fail(QcStatus::NullPointer, "out is null");
        }
        if count == 0 {
            return fail(QcStatus::InvalidArgument, "count must be at least 1");
        }
        let opts = match options(zero_tol) {
            Ok(o) => o,
            Err(s) => return s,
        };
        match solve_quadcurl_eig(&pc.pencil, count, &opts) {
            Ok(sol) => emit(out, QcEigenSolution { sol }),
            Err(e) => fail(system_status(&e), e.to_string()),
        }
    })
}

/// First `count` nonzero Maxwell eigenpairs on `mesh` with order `order`.
///
/// # Safety
/// `mesh` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qc_maxwell_eig(
    mesh: *const QcMesh,
    order: u32,
    count: usize,
    zero_tol: f64,
    out: *mut *mut QcEigenSolution,
) -> QcStatus {
    guard(|| {
        let Some(m) = mesh.as_ref() else {
            return fail(QcStatus::NullPointer, "mesh is null");
        };
        if out.is_null() {
            return fail(QcStatus::NullPointer, "out is null");
        }
        if !(1..=2).contains(&order) {
            return fail(
                QcStatus::InvalidArgument,
                format!("order must be 1 or 2, got {order}"),
            );
        }
        if count == 0 {
            return fail(QcStatus::InvalidArgument, "count must be at least 1");
        }
        let opts = match options(zero_tol) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let result = Operators::new(&m.data, order as usize)
            .and_then(|ops| solve_maxwell_eig(&Arc::new(ops), count, &opts));
        match result {
            Ok(sol) => emit(out, QcEigenSolution { sol }),
            Err(e) => fail(system_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qc_solution_free(sol: *mut QcEigenSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Number of returned eigenpairs; 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qc_solution_len(sol: *const QcEigenSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.sol.eig.len())
}

/// Length of each eigenvector (`N`, the interior edge DoF count).
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qc_solution_vector_len(sol: *const QcEigenSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.sol.n)
}

/// Eigenvalue `index` with its pencil residual and discrete divergence
/// residual. Output pointers other than `value` may be null.
///
/// # Safety
/// `sol` must be a live handle and `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qc_solution_eigenvalue(
    sol: *const QcEigenSolution,
    index: usize,
    value: *mut f64,
    residual: *mut f64,
    divergence_residual: *mut f64,
) -> QcStatus {
    guard(|| {
        let Some(s) = sol.as_ref() else {
            return fail(QcStatus::NullPointer, "solution is null");
        };
        if value.is_null() {
            return fail(QcStatus::NullPointer, "value is null");
        }
        let e = &s.sol;
        if index >= e.eig.len() {
            return fail(
                QcStatus::OutOfRange,
                format!("index {index} >= {}", e.eig.len()),
            );
        }
        *value = e.eig.values[index];
        if let Some(r) = residual.as_mut() {
            *r = e.eig.residuals[index];
        }
        if let Some(r) = divergence_residual.as_mut() {
            *r = e.divergence_residuals[index];
        }
        QcStatus::Ok
    })
}

/// Copies eigenvector `index` into `buf`, which must hold
/// [`qc_solution_vector_len`] doubles.
///
/// # Safety
/// `sol` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn qc_solution_vector(
    sol: *const QcEigenSolution,
    index: usize,
    buf: *mut f64,
    len: usize,
) -> QcStatus {
    guard(|| {
        let Some(s) = sol.as_ref() else {
            return fail(QcStatus::NullPointer, "solution is null");
        };
        if buf.is_null() {
            return fail(QcStatus::NullPointer, "buf is null");
        }
        let Some(v) = s.sol.eig.vectors.get(index) else {
            return fail(QcStatus::OutOfRange, format!("index {index} out of range"));
        };
        if len < v.len() {
            return fail(
                QcStatus::OutOfRange,
                format!("buffer holds {len} values, {} needed", v.len()),
            );
        }
        std::slice::from_raw_parts_mut(buf, v.len()).copy_from_slice(v);
        QcStatus::Ok
    })
}

/// Number of eigenvalues classified as zero, when the dense path computed
/// the whole spectrum. Returns `QC_STATUS_OUT_OF_RANGE` otherwise.
///
/// # Safety
/// `sol` must be a live handle and `count` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qc_solution_zero_count(
    sol: *const QcEigenSolution,
    count: *mut usize,
) -> QcStatus {
    guard(|| {
        let Some(s) = sol.as_ref() else {
            return fail(QcStatus::NullPointer, "solution is null");
        };
        if count.is_null() {
            return fail(QcStatus::NullPointer, "count is null");
        }
        match s.sol.zero_count {
            Some(z) => {
                *count = z;
                QcStatus::Ok
            }
            None => fail(
                QcStatus::OutOfRange,
                "zero count is only known on the dense path",
            ),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status_codes() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, QcStatus::Panic);
        let msg = unsafe { CStr::from_ptr(qc_last_error()) }.to_str().unwrap();
        assert!(msg.contains("boom"));
    }

    #[test]
    fn error_messages_survive_interior_nul() {
        assert_eq!(fail(QcStatus::Mesh, "a\0b"), QcStatus::Mesh);
        let msg = unsafe { CStr::from_ptr(qc_last_error()) }.to_str().unwrap();
        assert_eq!(msg, "a b");
    }

    #[test]
    fn zero_tol_is_validated() {
        assert!(options(1e-8).is_ok());
        for bad in [0.0, 1.0, -1.0, f64::NAN] {
            assert_eq!(options(bad).err(), Some(QcStatus::InvalidArgument));
        }
    }
}
