//! Eigenvalue machinery for the tridiagonal family.
//!
//! Two solvers cover the parameter space. When every off-diagonal product is
//! positive, a diagonal similarity turns the matrix into a real symmetric
//! tridiagonal one with off-diagonal `sqrt(sup·sub)` — proving the spectrum
//! real — and Sturm-sequence bisection then delivers every eigenvalue to
//! near machine precision. Outside that region the spectrum may complexify,
//! and an implicit double-shift QR iteration (no eigenvector accumulation)
//! takes over. A characteristic-polynomial three-term recurrence supports
//! validation, Newton refinement, and eigenvector extraction by inverse
//! iteration.

use nalgebra::DVector;
use num_complex::Complex;
use thiserror::Error;

use crate::lattice::LatticeHamiltonian;

/// Default tolerance on `|Im E|` below which an eigenvalue counts as real.
pub const DEFAULT_TOL_REAL: f64 = 1e-9;

/// Errors from the eigenvalue solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    /// An off-diagonal product is zero or negative at the given (1-based)
    /// position; no diagonal similarity can symmetrize the matrix.
    #[error("off-diagonal product at position {0} is not positive; matrix is not symmetrizable")]
    NotSymmetrizable(usize),
    /// The QR iteration exhausted its sweep budget.
    #[error("QR iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
    /// The given value is not an eigenvalue (scaled characteristic-polynomial
    /// residual attached).
    #[error("{0} is not an eigenvalue (characteristic polynomial residual {1:.3e})")]
    NotAnEigenvalue(f64, f64),
    /// The characteristic polynomial derivative vanishes at the eigenvalue;
    /// eigenpair extraction here requires simple eigenvalues.
    #[error("eigenvalue {0} is degenerate or too close to another one")]
    DegenerateEigenvalue(f64),
}

/// Characteristic polynomial data at one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharpolyEval {
    /// `det(H - E·I)`.
    pub value: f64,
    /// Derivative of the determinant with respect to `E`.
    pub derivative: f64,
    /// Largest magnitude among the leading principal minors encountered;
    /// residual comparisons should be scaled by this.
    pub scale: f64,
    /// Largest magnitude among the minor derivatives encountered.
    pub derivative_scale: f64,
}

/// Evaluate `det(H - E·I)` and its `E`-derivative by the leading-principal-
/// minor three-term recurrence.
pub fn charpoly_with_derivative(h: &LatticeHamiltonian, e: f64) -> CharpolyEval {
    let n = h.n();
    let diag = h.diag();
    let sup = h.sup();
    let sub = h.sub();
    // d_k = (diag_k - E)·d_{k-1} - sup_{k-1}·sub_{k-1}·d_{k-2}
    let mut d_prev = 1.0f64; // minor of order 0
    let mut d = diag[0] - e; // minor of order 1
    let mut dp_prev = 0.0f64; // derivative of order-0 minor
    let mut dp = -1.0f64; // derivative of order-1 minor
    let mut scale = d.abs().max(1.0);
    let mut dscale = 1.0f64;
    for k in 1..n {
        let a = diag[k] - e;
        let q = sup[k - 1] * sub[k - 1];
        let d_next = a * d - q * d_prev;
        let dp_next = -d + a * dp - q * dp_prev;
        d_prev = d;
        d = d_next;
        dp_prev = dp;
        dp = dp_next;
        scale = scale.max(d.abs());
        dscale = dscale.max(dp.abs());
    }
    CharpolyEval {
        value: d,
        derivative: dp,
        scale,
        derivative_scale: dscale,
    }
}

/// Real symmetric tridiagonal matrix, stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTridiagonal {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

/// The symmetric tridiagonal matrix diagonally similar to `h`, which exists
/// precisely when every off-diagonal product is positive. Its off-diagonal is
/// `sqrt(sup·sub)`, so it shares the characteristic polynomial of `h` — which
/// is why a successful symmetrization proves the spectrum real.
pub fn symmetrize(h: &LatticeHamiltonian) -> Result<SymmetricTridiagonal, SpectraError> {
    let mut offdiag = Vec::with_capacity(h.n() - 1);
    for (i, (s, t)) in h.sup().iter().zip(h.sub()).enumerate() {
        let q = s * t;
        if q <= 0.0 {
            return Err(SpectraError::NotSymmetrizable(i + 1));
        }
        offdiag.push(q.sqrt());
    }
    Ok(SymmetricTridiagonal {
        diag: h.diag().to_vec(),
        offdiag,
    })
}

impl SymmetricTridiagonal {
    /// Number of eigenvalues strictly below `x`, by the Sturm/LDL sign count.
    pub fn count_below(&self, x: f64) -> usize {
        let n = self.diag.len();
        // Guard against exact zero pivots the way banded bisection codes do:
        // nudge them to a tiny negative value.
        let pivmin = f64::MIN_POSITIVE
            * self
                .offdiag
                .iter()
                .fold(1.0f64, |acc, b| acc.max(b * b));
        let mut count = 0usize;
        let mut d = 1.0f64;
        for i in 0..n {
            let b2 = if i == 0 {
                0.0
            } else {
                self.offdiag[i - 1] * self.offdiag[i - 1]
            };
            d = (self.diag[i] - x) - b2 / d;
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// All eigenvalues in ascending order, each bisected to an interval of
    /// width `1e-12` inside the Gershgorin bounds.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.diag.len();
        let (mut glo, mut ghi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let r = self.offdiag.get(i.wrapping_sub(1)).copied().unwrap_or(0.0).abs()
                + self.offdiag.get(i).copied().unwrap_or(0.0).abs();
            glo = glo.min(self.diag[i] - r);
            ghi = ghi.max(self.diag[i] + r);
        }
        let pad = 1e-8 * (ghi - glo).max(1.0);
        glo -= pad;
        ghi += pad;
        let tol = 1e-12;
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let (mut lo, mut hi) = (glo, ghi);
            for _ in 0..200 {
                if hi - lo <= tol {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.count_below(mid) <= k {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out
    }
}

/// All eigenvalues by the implicit double-shift QR iteration on the (already
/// Hessenberg) dense matrix. No eigenvector accumulation; deflation by the
/// usual relative subdiagonal test; an exceptional shift is injected every
/// tenth stalled sweep.
pub fn eigenvalues_qr(h: &LatticeHamiltonian) -> Result<Vec<Complex<f64>>, SpectraError> {
    let n = h.n();
    let mut a = h.dense();
    let mut evs: Vec<Complex<f64>> = Vec::with_capacity(n);
    let mut p = n;
    let mut sweeps = 0usize;
    let max_sweeps = 100 * n.max(1);
    let mut stall = 0usize;
    while p > 0 {
        for i in 1..p {
            let bound = f64::EPSILON * (a[(i - 1, i - 1)].abs() + a[(i, i)].abs());
            if a[(i, i - 1)].abs() <= bound {
                a[(i, i - 1)] = 0.0;
            }
        }
        if p == 1 || a[(p - 1, p - 2)] == 0.0 {
            evs.push(Complex::new(a[(p - 1, p - 1)], 0.0));
            p -= 1;
            stall = 0;
            continue;
        }
        if p == 2 || a[(p - 2, p - 3)] == 0.0 {
            let (e1, e2) = eig2(
                a[(p - 2, p - 2)],
                a[(p - 2, p - 1)],
                a[(p - 1, p - 2)],
                a[(p - 1, p - 1)],
            );
            evs.push(e1);
            evs.push(e2);
            p -= 2;
            stall = 0;
            continue;
        }
        sweeps += 1;
        stall += 1;
        if sweeps > max_sweeps {
            return Err(SpectraError::NoConvergence(sweeps));
        }
        let mut l = p - 2;
        while l > 0 && a[(l, l - 1)] != 0.0 {
            l -= 1;
        }
        let (s, t) = if stall.is_multiple_of(10) {
            // Exceptional shift, built from the trailing subdiagonal sizes.
            let w = a[(p - 1, p - 2)].abs() + a[(p - 2, p - 3)].abs();
            (2.0 * w, w * w)
        } else {
            let m = a[(p - 2, p - 2)];
            let q = a[(p - 1, p - 1)];
            (m + q, m * q - a[(p - 2, p - 1)] * a[(p - 1, p - 2)])
        };
        francis_sweep(&mut a, l, p, s, t);
    }
    Ok(evs)
}

/// Eigenvalues of `[[a, b], [c, d]]`.
fn eig2(a: f64, b: f64, c: f64, d: f64) -> (Complex<f64>, Complex<f64>) {
    let half_tr = 0.5 * (a + d);
    let det = a * d - b * c;
    let disc = half_tr * half_tr - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        (
            Complex::new(half_tr - r, 0.0),
            Complex::new(half_tr + r, 0.0),
        )
    } else {
        let r = (-disc).sqrt();
        (Complex::new(half_tr, -r), Complex::new(half_tr, r))
    }
}

/// One implicit double-shift bulge chase on the active block `[l, p)` of the
/// Hessenberg matrix `a`, with combined shift polynomial `x² - s·x + t`.
/// Updates are restricted to the block; the similarity is not accumulated.
fn francis_sweep(a: &mut nalgebra::DMatrix<f64>, l: usize, p: usize, s: f64, t: f64) {
    let mut x = a[(l, l)] * a[(l, l)] + a[(l, l + 1)] * a[(l + 1, l)] - s * a[(l, l)] + t;
    let mut y = a[(l + 1, l)] * (a[(l, l)] + a[(l + 1, l + 1)] - s);
    let mut z = if l + 2 < p {
        a[(l + 2, l + 1)] * a[(l + 1, l)]
    } else {
        0.0
    };
    let mut k = l;
    loop {
        let three = k + 2 < p;
        let rows = if three { 3 } else { 2 };
        if let Some((v, beta)) = householder(if three { [x, y, z] } else { [x, y, 0.0] }, rows) {
            let col0 = if k > l { k - 1 } else { l };
            for j in col0..p {
                let mut u = 0.0;
                for r in 0..rows {
                    u += v[r] * a[(k + r, j)];
                }
                u *= beta;
                for r in 0..rows {
                    a[(k + r, j)] -= u * v[r];
                }
            }
            let row_end = p.min(k + rows + 1);
            for i in l..row_end {
                let mut u = 0.0;
                for c in 0..rows {
                    u += a[(i, k + c)] * v[c];
                }
                u *= beta;
                for c in 0..rows {
                    a[(i, k + c)] -= u * v[c];
                }
            }
        }
        if !three {
            break;
        }
        x = a[(k + 1, k)];
        y = a[(k + 2, k)];
        z = if k + 3 < p { a[(k + 3, k)] } else { 0.0 };
        k += 1;
        if k + 1 >= p {
            break;
        }
    }
}

/// Householder reflector mapping `w` (first `rows` entries) onto a multiple of
/// the first axis: returns `(v, beta)` with `I - beta·v·vᵀ`, or `None` when
/// `w` is already there.
fn householder(w: [f64; 3], rows: usize) -> Option<([f64; 3], f64)> {
    let norm2 = w[..rows].iter().map(|x| x * x).sum::<f64>();
    let norm = norm2.sqrt();
    if norm == 0.0 {
        return None;
    }
    let alpha = if w[0] >= 0.0 { -norm } else { norm };
    let mut v = w;
    v[0] -= alpha;
    let vtv = v[..rows].iter().map(|x| x * x).sum::<f64>();
    if vtv == 0.0 {
        return None;
    }
    Some((v, 2.0 / vtv))
}

/// All eigenvalues of `h`, sorted by `(Re, Im)`. Symmetrizable members go
/// through Sturm bisection; everything else through the QR iteration.
pub fn eigenvalues(h: &LatticeHamiltonian) -> Result<Vec<Complex<f64>>, SpectraError> {
    match symmetrize(h) {
        Ok(t) => Ok(t
            .eigenvalues()
            .into_iter()
            .map(|x| Complex::new(x, 0.0))
            .collect()),
        Err(SpectraError::NotSymmetrizable(_)) => {
            let mut evs = eigenvalues_qr(h)?;
            evs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
            Ok(evs)
        }
        Err(e) => Err(e),
    }
}

/// Number of eigenvalues within `tol` of the real axis.
pub fn real_count(h: &LatticeHamiltonian, tol: f64) -> Result<usize, SpectraError> {
    Ok(eigenvalues(h)?
        .iter()
        .filter(|e| e.im.abs() <= tol)
        .count())
}

/// A computed spectrum together with the reality-classification tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<Complex<f64>>,
    tol_real: f64,
}

impl Spectrum {
    /// Compute with [`DEFAULT_TOL_REAL`].
    pub fn compute(h: &LatticeHamiltonian) -> Result<Self, SpectraError> {
        Self::compute_with_tol(h, DEFAULT_TOL_REAL)
    }

    pub fn compute_with_tol(h: &LatticeHamiltonian, tol_real: f64) -> Result<Self, SpectraError> {
        Ok(Spectrum {
            values: eigenvalues(h)?,
            tol_real,
        })
    }

    /// Eigenvalues sorted by `(Re, Im)`.
    pub fn values(&self) -> &[Complex<f64>] {
        &self.values
    }

    pub fn tol_real(&self) -> f64 {
        self.tol_real
    }

    pub fn is_real(&self, index: usize) -> bool {
        self.values[index].im.abs() <= self.tol_real
    }

    pub fn real_count(&self) -> usize {
        self.values
            .iter()
            .filter(|e| e.im.abs() <= self.tol_real)
            .count()
    }

    pub fn is_fully_real(&self) -> bool {
        self.real_count() == self.values.len()
    }

    /// Real parts of the eigenvalues classified real, ascending.
    pub fn real_values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .values
            .iter()
            .filter(|e| e.im.abs() <= self.tol_real)
            .map(|e| e.re)
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }
}

/// A simple real eigenvalue with right and left eigenvectors, each normalized
/// so its largest-magnitude component (the first such, on ties) equals `+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub right: DVector<f64>,
    pub left: DVector<f64>,
}

/// Validate and refine an approximate real eigenvalue, then extract its right
/// and left eigenvectors by inverse iteration.
///
/// The input is rejected as [`SpectraError::NotAnEigenvalue`] when the scaled
/// characteristic-polynomial residual exceeds `1e-6`, and as
/// [`SpectraError::DegenerateEigenvalue`] when the derivative is too small to
/// identify a simple root. The left eigenvector is the right eigenvector of
/// the adjoint at the same (real) eigenvalue.
pub fn eigenpair(h: &LatticeHamiltonian, e_approx: f64) -> Result<EigenPair, SpectraError> {
    let ev = charpoly_with_derivative(h, e_approx);
    let residual = ev.value.abs() / ev.scale.max(1.0);
    if residual > 1e-6 {
        return Err(SpectraError::NotAnEigenvalue(e_approx, residual));
    }
    if ev.derivative.abs() <= 1e-7 * ev.derivative_scale.max(1.0) {
        return Err(SpectraError::DegenerateEigenvalue(e_approx));
    }
    // Newton refinement on the characteristic polynomial.
    let mut e = e_approx;
    for _ in 0..20 {
        let c = charpoly_with_derivative(h, e);
        if c.derivative.abs() <= 1e-12 * c.derivative_scale.max(1.0) {
            break;
        }
        let step = c.value / c.derivative;
        e -= step;
        if step.abs() <= 1e-15 * e.abs().max(1.0) {
            break;
        }
    }
    let right = inverse_iteration(h, e);
    let left = inverse_iteration(&h.adjoint(), e);
    Ok(EigenPair {
        value: e,
        right,
        left,
    })
}

/// Inverse iteration for the eigenvector of `h` at the (already refined)
/// eigenvalue `e`, using a partial-pivot tridiagonal solve.
fn inverse_iteration(h: &LatticeHamiltonian, e: f64) -> DVector<f64> {
    let n = h.n();
    let shifted_diag: Vec<f64> = h.diag().iter().map(|d| d - e).collect();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..3 {
        let y = solve_tridiag_partial_pivot(h.sub(), &shifted_diag, h.sup(), &x);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
    }
    // Fix the sign/scale convention: largest-magnitude component becomes +1.
    let mut idx = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[idx].abs() {
            idx = i;
        }
    }
    let pivot = x[idx];
    DVector::from_iterator(n, x.iter().map(|v| v / pivot))
}

/// Solve `T·x = b` for tridiagonal `T` (given as sub/main/super diagonals)
/// with partial pivoting; fill-in appears on a second superdiagonal. Pivots
/// below an absolute floor are replaced by the floor — the standard inverse-
/// iteration convention, which keeps nearly singular shifts solvable.
fn solve_tridiag_partial_pivot(dl: &[f64], d: &[f64], du: &[f64], b: &[f64]) -> Vec<f64> {
    let n = d.len();
    let scale = d
        .iter()
        .chain(dl)
        .chain(du)
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    let floor = f64::EPSILON * scale;
    let mut md = d.to_vec();
    let mut u1 = du.to_vec(); // column i+1 of row i
    let mut u2 = vec![0.0; n.saturating_sub(2)]; // fill-in, column i+2 of row i
    let mut rhs = b.to_vec();
    let low = dl.to_vec(); // column i of row i+1 during elimination
    for i in 0..n.saturating_sub(1) {
        // Row i holds (md, u1, u2); row i+1 starts with `low[i]` in column i.
        let ri = (
            md[i],
            u1[i],
            if i + 2 < n { u2[i] } else { 0.0 },
        );
        let rn = (
            low[i],
            md[i + 1],
            if i + 2 < n { u1[i + 1] } else { 0.0 },
        );
        let (mut top, bottom) = if rn.0.abs() > ri.0.abs() {
            rhs.swap(i, i + 1);
            (rn, ri)
        } else {
            (ri, rn)
        };
        if top.0.abs() < floor {
            top.0 = if top.0 < 0.0 { -floor } else { floor };
        }
        let factor = bottom.0 / top.0;
        md[i] = top.0;
        u1[i] = top.1;
        if i + 2 < n {
            u2[i] = top.2;
        }
        md[i + 1] = bottom.1 - factor * top.1;
        if i + 2 < n {
            u1[i + 1] = bottom.2 - factor * top.2;
        }
        rhs[i + 1] -= factor * rhs[i];
    }
    if md[n - 1].abs() < floor {
        md[n - 1] = if md[n - 1] < 0.0 { -floor } else { floor };
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        if i + 1 < n {
            acc -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            acc -= u2[i] * x[i + 2];
        }
        x[i] = acc / md[i];
    }
    x
}
