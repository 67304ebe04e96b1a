//! C interface to eigencrofton.
//!
//! Bases and meshes are opaque handles created by `ec_*_new`/`ec_*_read`
//! functions and released with the matching `ec_*_free`. Every fallible call
//! returns an [`EcStatus`]; on failure the message is kept per thread and can
//! be copied out with [`ec_last_error_message`]. Panics never cross the
//! boundary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use eigencrofton::averaging::{resolve_threads, run_zero_average, RunOptions};
use eigencrofton::crofton::{crofton_average, SphericalMesh};
use eigencrofton::embedding::{predicted_average_zeros, weyl_bound};
use eigencrofton::models::{circle_eigenbasis, sphere2_eigenbasis, torus_eigenbasis, EigenspacePolicy};
use eigencrofton::report::{ExperimentReport, Verdict};
use eigencrofton::{EigenBasis, Error, Point};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    EigenvalueCollision = 3,
    ConstancyViolation = 4,
    NotIsotropyIrreducible = 5,
    CoveringDegree = 6,
    DegenerateFrame = 7,
    NonConvergent = 8,
    TooManyUncertified = 9,
    UnexpectedInfinite = 10,
    DegenerateNonzero = 11,
    Ambiguous = 12,
    MeshFormat = 13,
    Config = 14,
    Io = 15,
    Panic = 16,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EcVerdict {
    EqualityConfirmed = 0,
    StrictInequalityConfirmed = 1,
    BoundViolated = 2,
    Inconclusive = 3,
}

/// Torus frequency orbit policy: 0 single orbit, 1 merged, 2 strict.
pub type EcPolicy = i32;

/// Summary of a Monte Carlo run.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EcReport {
    pub estimate: f64,
    /// Standard error of the estimate.
    pub std_error: f64,
    pub theory: f64,
    pub bound: f64,
    pub trials: usize,
    pub certified: usize,
    pub uncertified: usize,
    pub verdict: EcVerdict,
    /// 1 when the estimate agrees with the theoretical value.
    pub consistent: i32,
}

/// Opaque eigenbasis handle.
pub struct EcBasis(EigenBasis);

/// Opaque spherical mesh handle.
pub struct EcMesh(SphericalMesh);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> EcStatus {
    match e {
        Error::InvalidArgument(_) => EcStatus::InvalidArgument,
        Error::EigenvalueCollision { .. } => EcStatus::EigenvalueCollision,
        Error::ConstancyViolation { .. } => EcStatus::ConstancyViolation,
        Error::NotIsotropyIrreducible => EcStatus::NotIsotropyIrreducible,
        Error::CoveringDegree { .. } => EcStatus::CoveringDegree,
        Error::DegenerateFrame => EcStatus::DegenerateFrame,
        Error::NonConvergent { .. } => EcStatus::NonConvergent,
        Error::TooManyUncertified { .. } => EcStatus::TooManyUncertified,
        Error::UnexpectedInfinite { .. } => EcStatus::UnexpectedInfinite,
        Error::DegenerateNonzero { .. } => EcStatus::DegenerateNonzero,
        Error::Ambiguous => EcStatus::Ambiguous,
        Error::MeshFormat { .. } => EcStatus::MeshFormat,
        Error::Config(_) => EcStatus::Config,
        Error::Io(_) => EcStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> EcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EcStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} must not be null"));
            EcStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            EcStatus::Panic
        }
    }
}


unsafe fn basis_ref<'a>(h: *const EcBasis) -> Result<&'a EigenBasis, Fail> {
    h.as_ref().map(|b| &b.0).ok_or(Fail::Null("basis"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn report_of(r: &ExperimentReport) -> EcReport {
    EcReport {
        estimate: r.estimate,
        std_error: r.stderr,
        theory: r.theory,
        bound: r.bound,
        trials: r.trials,
        certified: r.certified,
        uncertified: r.uncertified,
        verdict: match r.verdict {
            Verdict::EqualityConfirmed => EcVerdict::EqualityConfirmed,
            Verdict::StrictInequalityConfirmed => EcVerdict::StrictInequalityConfirmed,
            Verdict::BoundViolated => EcVerdict::BoundViolated,
            Verdict::Inconclusive => EcVerdict::Inconclusive,
        },
        consistent: r.consistent as i32,
    }
}

fn boxed(b: EigenBasis) -> *mut EcBasis {
    Box::into_raw(Box::new(EcBasis(b)))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ec_version() -> *const c_char {
    static VERSION: &[u8] = concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes();
    VERSION.as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ec_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Basis {cos lθ, sin lθ}/√π on the unit circle.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn ec_basis_circle_new(l: usize, out: *mut *mut EcBasis) -> EcStatus {
    guard(|| {
        let b = circle_eigenbasis(l)?;
        write_out(out, boxed(b))
    })
}

/// Real orthonormal spherical harmonics of degree l on S².
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn ec_basis_sphere2_new(l: usize, out: *mut *mut EcBasis) -> EcStatus {
    guard(|| {
        let b = sphere2_eigenbasis(l)?;
        write_out(out, boxed(b))
    })
}

/// Flat torus R²/(p1 Z × p2 Z) eigenbasis for the orbit of (k1, k2).
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn ec_basis_torus_new(
    p1: f64,
    p2: f64,
    k1: i64,
    k2: i64,
    policy: EcPolicy,
    out: *mut *mut EcBasis,
) -> EcStatus {
    guard(|| {
        let policy = match policy {
            0 => EigenspacePolicy::SingleOrbit,
            1 => EigenspacePolicy::Merged,
            2 => EigenspacePolicy::Strict,
            other => return Err(Error::InvalidArgument(format!("unknown policy {other}")).into()),
        };
        let b = torus_eigenbasis([p1, p2], [k1, k2], policy)?;
        write_out(out, boxed(b))
    })
}

/// Releases a basis; null is ignored.
///
/// # Safety
/// `basis` must come from an `ec_basis_*_new` call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ec_basis_free(basis: *mut EcBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// Number of basis functions N; 0 for a null handle.
///
/// # Safety
/// `basis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ec_basis_dim(basis: *const EcBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.0.dim())
}

/// Eigenvalue λ; NaN for a null handle.
///
/// # Safety
/// `basis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ec_basis_lambda(basis: *const EcBasis) -> f64 {
    basis.as_ref().map_or(f64::NAN, |b| b.0.lambda())
}

/// Evaluates all basis functions at a point. Coordinates: one angle on the
/// circle, a unit 3-vector on S², (x, y) on the torus.
///
/// # Safety
/// `coords` must be valid for `ncoords` reads and `values` for `nvalues` writes.
#[no_mangle]
pub unsafe extern "C" fn ec_basis_eval(
    basis: *const EcBasis,
    coords: *const f64,
    ncoords: usize,
    values: *mut f64,
    nvalues: usize,
) -> EcStatus {
    guard(|| {
        let b = basis_ref(basis)?;
        if coords.is_null() || values.is_null() {
            return Err(Fail::Null("coordinate and value buffers"));
        }
        let c = std::slice::from_raw_parts(coords, ncoords);
        let p = match (b.model().kind(), c) {
            (eigencrofton::ModelKind::Circle, [t]) => Point::Circle(*t),
            (eigencrofton::ModelKind::Sphere2, [x, y, z]) => {
                let r = (x * x + y * y + z * z).sqrt();
                if !((r - 1.0).abs() < 1e-9) {
                    return Err(Error::InvalidArgument(format!("sphere point has norm {r}")).into());
                }
                Point::Sphere([*x, *y, *z])
            }
            (eigencrofton::ModelKind::FlatTorus2, [x, y]) => Point::Torus([*x, *y]),
            _ => return Err(Error::InvalidArgument(format!("{ncoords} coordinates do not match the model")).into()),
        };
        if nvalues != b.dim() {
            return Err(Error::InvalidArgument(format!("value buffer holds {nvalues}, basis has {}", b.dim())).into());
        }
        b.eval(&b.model().canonical(p), std::slice::from_raw_parts_mut(values, nvalues), None);
        Ok(())
    })
}

/// Closed-form average zero count (2/σₙ)·√(β₁⋯βₙ)·vol M.
///
/// # Safety
/// `basis` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ec_predicted_average(basis: *const EcBasis, out: *mut f64) -> EcStatus {
    guard(|| {
        let v = predicted_average_zeros(basis_ref(basis)?)?;
        write_out(out, v)
    })
}

/// Upper bound c(n)·λ^{n/2}·vol M.
///
/// # Safety
/// `basis` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ec_weyl_bound(basis: *const EcBasis, out: *mut f64) -> EcStatus {
    guard(|| {
        let v = weyl_bound(basis_ref(basis)?);
        write_out(out, v)
    })
}

/// Monte Carlo average of the number of common zeros of n random elements.
/// `threads` = 0 uses the default worker count.
///
/// # Safety
/// `basis` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ec_run_zero_average(
    basis: *const EcBasis,
    trials: usize,
    seed: u64,
    threads: usize,
    out: *mut EcReport,
) -> EcStatus {
    guard(|| {
        let b = basis_ref(basis)?;
        let opts = RunOptions::new(trials, seed).with_threads(threads);
        let r = run_zero_average(b, &opts)?;
        write_out(out, report_of(&r))
    })
}

/// Reads a mesh file (`N m` header, `v` and `c` records).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ec_mesh_read(path: *const c_char, out: *mut *mut EcMesh) -> EcStatus {
    guard(|| {
        if path.is_null() {
            return Err(Fail::Null("path"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Error::InvalidArgument("path is not UTF-8".into()))?;
        let mesh = SphericalMesh::read(Path::new(p))?;
        write_out(out, Box::into_raw(Box::new(EcMesh(mesh))))
    })
}

/// Releases a mesh; null is ignored.
///
/// # Safety
/// `mesh` must come from `ec_mesh_read` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ec_mesh_free(mesh: *mut EcMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Total volume of a mesh (arc length or area); NaN for null.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ec_mesh_volume(mesh: *const EcMesh) -> f64 {
    mesh.as_ref().map_or(f64::NAN, |m| m.0.total_volume())
}

/// Haar average of the number of intersections with rotated great subspheres.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ec_crofton_average(
    mesh: *const EcMesh,
    trials: usize,
    seed: u64,
    threads: usize,
    out: *mut EcReport,
) -> EcStatus {
    guard(|| {
        let m = mesh.as_ref().map(|m| &m.0).ok_or(Fail::Null("mesh"))?;
        let r = crofton_average(m, trials, seed, resolve_threads(threads))?;
        write_out(out, report_of(&r))
    })
}
