//! C ABI for the lattice spectra library.
//!
//! Every fallible entry point returns a [`PtStatus`] code and writes results
//! through caller-supplied buffers; matrices are copied out in row-major
//! order. Handles from [`pt_hamiltonian_new`] are owned by the caller and
//! must be released with [`pt_hamiltonian_free`]. Rust panics never cross the
//! boundary: they are caught and reported as `PT_STATUS_NUMERICAL_FAILURE`.
//!
//! The generated header lives at `include/ptlat.h`.

use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use ptlat::dieudonne::{banded_pseudometric, DieudonneError};
use ptlat::lattice::{CouplingVector, LatticeHamiltonian};
use ptlat::metric::{assemble_metric, MetricError, Positivity, PseudometricBasis};
use ptlat::spectra::Spectrum;

/// Status code returned by every fallible function in this library.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range or a buffer had the wrong length.
    InvalidArgument = 2,
    /// The computation failed (degenerate spectrum, no convergence, ...).
    NumericalFailure = 3,
}

/// Definiteness classification of an assembled metric candidate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PtPositivity {
    PositiveDefinite = 0,
    Indefinite = 1,
    Singular = 2,
}

/// Opaque handle to a lattice member.
pub struct PtHamiltonian {
    inner: LatticeHamiltonian,
}

fn guard(body: impl FnOnce() -> PtStatus) -> PtStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => PtStatus::NumericalFailure,
    }
}

fn dieudonne_status(e: &DieudonneError) -> PtStatus {
    match e {
        DieudonneError::BandOutOfRange { .. }
        | DieudonneError::WrongParameterCount { .. }
        | DieudonneError::InvalidReduction { .. } => PtStatus::InvalidArgument,
        _ => PtStatus::NumericalFailure,
    }
}

fn metric_status(e: &MetricError) -> PtStatus {
    match e {
        MetricError::DimensionMismatch { .. } => PtStatus::InvalidArgument,
        MetricError::Dieudonne(inner) => dieudonne_status(inner),
        _ => PtStatus::NumericalFailure,
    }
}

/// Create a lattice member with `n` sites and the given couplings.
///
/// `couplings` points to `depth` values; `depth` may be 0 (plain Laplacian),
/// in which case `couplings` may be null. On success `*out` receives a handle
/// that must be released with [`pt_hamiltonian_free`].
///
/// # Safety
///
/// `couplings` must be valid for reads of `depth` doubles when `depth > 0`,
/// and `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pt_hamiltonian_new(
    n: usize,
    couplings: *const f64,
    depth: usize,
    out: *mut *mut PtHamiltonian,
) -> PtStatus {
    guard(|| {
        if out.is_null() || (depth > 0 && couplings.is_null()) {
            return PtStatus::NullPointer;
        }
        let params = if depth == 0 {
            Vec::new()
        } else {
            unsafe { std::slice::from_raw_parts(couplings, depth) }.to_vec()
        };
        if params.iter().any(|p| !p.is_finite()) {
            return PtStatus::InvalidArgument;
        }
        match LatticeHamiltonian::new(n, &CouplingVector::new(params)) {
            Ok(h) => {
                unsafe { *out = Box::into_raw(Box::new(PtHamiltonian { inner: h })) };
                PtStatus::Ok
            }
            Err(_) => PtStatus::InvalidArgument,
        }
    })
}

/// Release a handle created by [`pt_hamiltonian_new`]. Null is a no-op.
///
/// # Safety
///
/// `handle` must be null or a pointer previously returned by
/// [`pt_hamiltonian_new`] that has not already been freed.
#[no_mangle]
pub unsafe extern "C" fn pt_hamiltonian_free(handle: *mut PtHamiltonian) {
    if !handle.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| {
            drop(unsafe { Box::from_raw(handle) });
        }));
    }
}

/// Write the number of lattice sites to `*out`.
///
/// # Safety
///
/// `handle` must be a live handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pt_hamiltonian_size(
    handle: *const PtHamiltonian,
    out: *mut usize,
) -> PtStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            return PtStatus::NullPointer;
        }
        unsafe { *out = (*handle).inner.n() };
        PtStatus::Ok
    })
}

/// Copy the dense matrix into `out` in row-major order; `len` must be `n*n`.
///
/// # Safety
///
/// `handle` must be a live handle and `out` valid for writes of `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pt_hamiltonian_dense(
    handle: *const PtHamiltonian,
    out: *mut f64,
    len: usize,
) -> PtStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            return PtStatus::NullPointer;
        }
        let h = unsafe { &(*handle).inner };
        let n = h.n();
        if len != n * n {
            return PtStatus::InvalidArgument;
        }
        let dense = h.dense();
        let out = unsafe { std::slice::from_raw_parts_mut(out, len) };
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = dense[(i, j)];
            }
        }
        PtStatus::Ok
    })
}

/// Compute the spectrum; eigenvalues are sorted by real part, then imaginary.
///
/// `re_out` and `im_out` must each hold `len == n` doubles. If `real_count`
/// is non-null it receives the number of eigenvalues whose imaginary part is
/// within `tol_real` of zero (pass a non-positive `tol_real` for the
/// default tolerance).
///
/// # Safety
///
/// `handle` must be a live handle; `re_out` and `im_out` must be valid for
/// writes of `len` doubles; `real_count` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn pt_spectrum(
    handle: *const PtHamiltonian,
    tol_real: f64,
    re_out: *mut f64,
    im_out: *mut f64,
    len: usize,
    real_count: *mut usize,
) -> PtStatus {
    guard(|| {
        if handle.is_null() || re_out.is_null() || im_out.is_null() {
            return PtStatus::NullPointer;
        }
        let h = unsafe { &(*handle).inner };
        if len != h.n() {
            return PtStatus::InvalidArgument;
        }
        let tol = if tol_real > 0.0 {
            tol_real
        } else {
            ptlat::spectra::DEFAULT_TOL_REAL
        };
        let spectrum = match Spectrum::compute_with_tol(h, tol) {
            Ok(s) => s,
            Err(_) => return PtStatus::NumericalFailure,
        };
        let re = unsafe { std::slice::from_raw_parts_mut(re_out, len) };
        let im = unsafe { std::slice::from_raw_parts_mut(im_out, len) };
        for (i, v) in spectrum.values().iter().enumerate() {
            re[i] = v.re;
            im[i] = v.im;
        }
        if !real_count.is_null() {
            unsafe { *real_count = spectrum.real_count() };
        }
        PtStatus::Ok
    })
}

/// Solve the banded intertwiner ansatz with band index `band` (1-based,
/// `1 <= band <= n`) and copy the normalized solution into `out` (row-major,
/// `len == n*n`).
///
/// # Safety
///
/// `handle` must be a live handle and `out` valid for writes of `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pt_banded_pseudometric(
    handle: *const PtHamiltonian,
    band: usize,
    out: *mut f64,
    len: usize,
) -> PtStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            return PtStatus::NullPointer;
        }
        let h = unsafe { &(*handle).inner };
        let n = h.n();
        if len != n * n {
            return PtStatus::InvalidArgument;
        }
        let solution = match banded_pseudometric(h, band) {
            Ok(m) => m,
            Err(e) => return dieudonne_status(&e),
        };
        let out = unsafe { std::slice::from_raw_parts_mut(out, len) };
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = solution[(i, j)];
            }
        }
        PtStatus::Ok
    })
}

/// Assemble a metric candidate from the rank-one basis.
///
/// `coefficients` may be null (all ones) or point to `coeffs_len == n`
/// values. The candidate matrix is copied row-major into `theta_out`
/// (`theta_len == n*n`); `min_eigenvalue` and `positivity` are optional
/// outputs (null to skip).
///
/// # Safety
///
/// `handle` must be a live handle; `coefficients` must be null or valid for
/// reads of `coeffs_len` doubles; `theta_out` must be valid for writes of
/// `theta_len` doubles; `min_eigenvalue` and `positivity` must each be null
/// or writable.
#[no_mangle]
pub unsafe extern "C" fn pt_metric(
    handle: *const PtHamiltonian,
    coefficients: *const f64,
    coeffs_len: usize,
    theta_out: *mut f64,
    theta_len: usize,
    min_eigenvalue: *mut f64,
    positivity: *mut PtPositivity,
) -> PtStatus {
    guard(|| {
        if handle.is_null() || theta_out.is_null() {
            return PtStatus::NullPointer;
        }
        let h = unsafe { &(*handle).inner };
        let n = h.n();
        if theta_len != n * n {
            return PtStatus::InvalidArgument;
        }
        let coeffs = if coefficients.is_null() {
            vec![1.0; n]
        } else {
            if coeffs_len != n {
                return PtStatus::InvalidArgument;
            }
            unsafe { std::slice::from_raw_parts(coefficients, coeffs_len) }.to_vec()
        };
        let basis = match PseudometricBasis::rank_one(h) {
            Ok(b) => b,
            Err(e) => return metric_status(&e),
        };
        let candidate = match assemble_metric(&basis, &coeffs) {
            Ok(c) => c,
            Err(e) => return metric_status(&e),
        };
        let out = unsafe { std::slice::from_raw_parts_mut(theta_out, theta_len) };
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = candidate.theta[(i, j)];
            }
        }
        if !min_eigenvalue.is_null() {
            unsafe { *min_eigenvalue = candidate.min_eigenvalue };
        }
        if !positivity.is_null() {
            let p = match candidate.positivity {
                Positivity::PositiveDefinite => PtPositivity::PositiveDefinite,
                Positivity::Indefinite => PtPositivity::Indefinite,
                Positivity::Singular => PtPositivity::Singular,
            };
            unsafe { *positivity = p };
        }
        PtStatus::Ok
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
