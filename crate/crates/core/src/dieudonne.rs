//! Solvers for the intertwining relation `Hᵀ·X = X·H`.
//!
//! A real symmetric solution `X` makes `H` self-adjoint with respect to the
//! `X`-weighted bilinear form, so the solution set of this relation is the raw
//! material for metric operators. Three independent constructions are
//! provided, each useful as a cross-check on the others:
//!
//! * [`sylvester_kernel`] — the full kernel over symmetric matrices, by an SVD
//!   nullspace of the linearized relation; for a simple real spectrum its
//!   dimension equals the matrix size.
//! * [`rank_one_basis`] — the classical spectral solutions `l·lᵀ` built from
//!   left eigenvectors, one per eigenvalue.
//! * [`banded_pseudometric`] — a sparse ansatz: for each band index `k` there
//!   is (for odd `n`) exactly one solution supported on a centered diamond of
//!   width `k`, normalized to `1` at its central entry. An exact-rational twin
//!   ([`banded_pseudometric_exact`]) solves the same system with fraction-free
//!   elimination, and [`verify_formulas`] compares it against a closed-form
//!   catalogue of the low-depth cases with exact equality.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DMatrix;
use num::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactlin::{Rational, RationalMatrix};
use crate::lattice::{offdiagonals, LatticeError, LatticeHamiltonian};
use crate::spectra::{eigenpair, SpectraError, Spectrum};

/// Errors from the intertwiner solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DieudonneError {
    /// Band indices run from 1 (diagonal support) to `n` (antidiagonal).
    #[error("band index {k} is outside 1..={n}")]
    BandOutOfRange { k: usize, n: usize },
    /// The banded ansatz did not pin down a one-dimensional solution space.
    #[error("banded ansatz kernel has dimension {0}, expected 1")]
    AnsatzKernelNotOneDimensional(usize),
    /// The kernel solution vanishes where the normalization wants a `1`.
    #[error("kernel solution vanishes at the designated unit position; cannot normalize")]
    UnitElementVanishes,
    /// The singular value decomposition did not converge.
    #[error("singular value decomposition did not converge")]
    SvdFailed,
    /// Rank-one solutions need `n` distinct real eigenvalues.
    #[error("spectrum has repeated or complex eigenvalues; rank-one basis needs a simple real spectrum")]
    DegenerateSpectrum,
    /// A catalogue model was called with the wrong number of parameters.
    #[error("{model} expects {expected} parameter(s), got {got}")]
    WrongParameterCount {
        model: FormulaModel,
        expected: usize,
        got: usize,
    },
    /// Only the documented single-step reductions exist.
    #[error("no reduction from {from} to {to} is defined")]
    InvalidReduction { from: FormulaModel, to: FormulaModel },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// Max-magnitude entry of `Hᵀ·X − X·H`; zero exactly when `X` solves the
/// intertwining relation.
pub fn dieudonne_residual(h: &LatticeHamiltonian, x: &DMatrix<f64>) -> f64 {
    let hd = h.dense();
    let r = hd.transpose() * x - x * hd;
    r.amax()
}

/// Support pattern of the band-`k` ansatz on an `n×n` matrix (0-based
/// positions, sorted): a diamond of half-width `k − 1` around the diagonal,
/// truncated to half-width `n − k` around the antidiagonal, on the sublattice
/// `i + j ≡ n + k (mod 2)`. For `k = 1` this is the diagonal; for `k = n` the
/// antidiagonal.
pub fn support_positions(n: usize, k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let ni = n as isize;
    let ki = k as isize;
    for i in 0..n {
        for j in 0..n {
            let (ii, jj) = (i as isize, j as isize);
            if (ii - jj).abs() < ki
                && (ii + jj - (ni - 1)).abs() <= ni - ki
                && (i + j) % 2 == (n + k) % 2
            {
                out.push((i, j));
            }
        }
    }
    out
}

/// Orbits of matrix positions, each a sorted, deduplicated list.
type Orbits = Vec<Vec<(usize, usize)>>;
/// Position-to-orbit lookup; `None` marks positions outside the support.
type OrbitLookup = Vec<Vec<Option<usize>>>;

/// Orbit partition of the support under the symmetry group of the solutions
/// (transpose and point reflection through the matrix center): the list of
/// orbits plus a position-to-orbit lookup table.
fn orbit_partition(n: usize, k: usize) -> (Orbits, OrbitLookup) {
    let support = support_positions(n, k);
    let mut map = vec![vec![None; n]; n];
    let mut orbits: Vec<Vec<(usize, usize)>> = Vec::new();
    for &(i, j) in &support {
        if map[i][j].is_some() {
            continue;
        }
        let mut members = vec![
            (i, j),
            (j, i),
            (n - 1 - i, n - 1 - j),
            (n - 1 - j, n - 1 - i),
        ];
        members.sort_unstable();
        members.dedup();
        let idx = orbits.len();
        for &(a, b) in &members {
            map[a][b] = Some(idx);
        }
        orbits.push(members);
    }
    (orbits, map)
}

/// The support position closest to the matrix center (ties broken toward the
/// smaller row, then column); the solution is normalized to `1` there.
fn unit_position(n: usize, k: usize) -> Option<(usize, usize)> {
    let mut best: Option<((usize, usize), i64)> = None;
    for (i, j) in support_positions(n, k) {
        let di = 2 * i as i64 - (n as i64 - 1);
        let dj = 2 * j as i64 - (n as i64 - 1);
        let d = di * di + dj * dj;
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some(((i, j), d));
        }
    }
    best.map(|(p, _)| p)
}

/// Equations `(i, j)` (`i < j`) of the intertwining relation whose coefficient
/// rows can touch the support; all other rows are identically zero.
fn touched_equations(n: usize, orbits: &[Vec<(usize, usize)>]) -> BTreeSet<(usize, usize)> {
    let mut set = BTreeSet::new();
    for orbit in orbits {
        for &(a, b) in orbit {
            for (i, j) in [
                (a + 1, b),
                (a.wrapping_sub(1), b),
                (a, b + 1),
                (a, b.wrapping_sub(1)),
            ] {
                if i < n && j < n && i != j {
                    set.insert((i.min(j), i.max(j)));
                }
            }
        }
    }
    set
}

/// Coefficient row of the equation `(Hᵀ·X − X·H)[i][j] = 0` over the orbit
/// unknowns, generic over the scalar so the float and exact-rational paths
/// assemble the identical system.
fn equation_row<T>(
    n: usize,
    sup: &[T],
    sub: &[T],
    map: &[Vec<Option<usize>>],
    n_orbits: usize,
    (i, j): (usize, usize),
) -> Vec<T>
where
    T: Clone + Zero + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let mut row = vec![T::zero(); n_orbits];
    // (Hᵀ·X − X·H)[i][j] = sup[i−1]·X[i−1][j] + sub[i]·X[i+1][j]
    //                      − sup[j−1]·X[i][j−1] − sub[j]·X[i][j+1]
    // (the diagonal contributions 2·X[i][j] cancel).
    let mut accumulate = |pos: Option<usize>, val: T, positive: bool| {
        if let Some(o) = pos {
            row[o] = if positive {
                row[o].clone() + val
            } else {
                row[o].clone() - val
            };
        }
    };
    if i >= 1 {
        accumulate(map[i - 1][j], sup[i - 1].clone(), true);
    }
    if i + 1 < n {
        accumulate(map[i + 1][j], sub[i].clone(), true);
    }
    if j >= 1 {
        accumulate(map[i][j - 1], sup[j - 1].clone(), false);
    }
    if j + 1 < n {
        accumulate(map[i][j + 1], sub[j].clone(), false);
    }
    row
}

/// The band-`k` solution of the intertwining relation for `h`, normalized to
/// `1` at the support position nearest the matrix center.
pub fn banded_pseudometric(h: &LatticeHamiltonian, k: usize) -> Result<DMatrix<f64>, DieudonneError> {
    let n = h.n();
    if k == 0 || k > n {
        return Err(DieudonneError::BandOutOfRange { k, n });
    }
    let (orbits, map) = orbit_partition(n, k);
    if orbits.is_empty() {
        return Err(DieudonneError::AnsatzKernelNotOneDimensional(0));
    }
    let eqs = touched_equations(n, &orbits);
    let q = orbits.len();
    let rows = eqs.len().max(q);
    let mut m = DMatrix::zeros(rows, q);
    for (r, &pos) in eqs.iter().enumerate() {
        let row = equation_row(n, h.sup(), h.sub(), &map, q, pos);
        for (c, v) in row.into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    let svd = nalgebra::SVD::try_new(m, false, true, f64::EPSILON, 10_000)
        .ok_or(DieudonneError::SvdFailed)?;
    let vt = svd.v_t.as_ref().ok_or(DieudonneError::SvdFailed)?;
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let tol = 1e-10 * smax.max(f64::MIN_POSITIVE);
    let kernel_rows: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|&(_, s)| *s <= tol)
        .map(|(i, _)| i)
        .collect();
    if kernel_rows.len() != 1 {
        return Err(DieudonneError::AnsatzKernelNotOneDimensional(kernel_rows.len()));
    }
    let u = vt.row(kernel_rows[0]);
    let (ui, uj) = unit_position(n, k).expect("nonempty support");
    let scale = u[map[ui][uj].expect("unit position is in the support")];
    let umax = u.amax();
    if scale.abs() <= 1e-12 * umax {
        return Err(DieudonneError::UnitElementVanishes);
    }
    let mut x = DMatrix::zeros(n, n);
    for (o, orbit) in orbits.iter().enumerate() {
        let val = u[o] / scale;
        for &(a, b) in orbit {
            x[(a, b)] = val;
        }
    }
    Ok(x)
}

/// Exact-rational twin of [`banded_pseudometric`]: builds the same orbit
/// system over the rationals for the `n`-site member with the given couplings
/// and solves it by fraction-free elimination.
pub fn banded_pseudometric_exact(
    n: usize,
    params: &[Rational],
    k: usize,
) -> Result<RationalMatrix, DieudonneError> {
    if k == 0 || k > n {
        return Err(DieudonneError::BandOutOfRange { k, n });
    }
    let (sup, sub) = offdiagonals(n, params)?;
    let (orbits, map) = orbit_partition(n, k);
    if orbits.is_empty() {
        return Err(DieudonneError::AnsatzKernelNotOneDimensional(0));
    }
    let eqs = touched_equations(n, &orbits);
    let q = orbits.len();
    let mut m = RationalMatrix::zeros(eqs.len().max(1), q);
    for (r, &pos) in eqs.iter().enumerate() {
        let row = equation_row(n, &sup, &sub, &map, q, pos);
        for (c, v) in row.into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    let kernel = m.nullspace();
    if kernel.len() != 1 {
        return Err(DieudonneError::AnsatzKernelNotOneDimensional(kernel.len()));
    }
    let u = &kernel[0];
    let (ui, uj) = unit_position(n, k).expect("nonempty support");
    let scale = u[map[ui][uj].expect("unit position is in the support")].clone();
    if scale.is_zero() {
        return Err(DieudonneError::UnitElementVanishes);
    }
    let mut x = RationalMatrix::zeros(n, n);
    for (o, orbit) in orbits.iter().enumerate() {
        let val = &u[o] / &scale;
        for &(a, b) in orbit {
            x[(a, b)] = val.clone();
        }
    }
    Ok(x)
}

/// All band solutions `k = 1..=n`, in band order.
pub fn banded_basis(h: &LatticeHamiltonian) -> Result<Vec<DMatrix<f64>>, DieudonneError> {
    (1..=h.n()).map(|k| banded_pseudometric(h, k)).collect()
}

/// Orthonormal (Frobenius) basis of the full solution space of the
/// intertwining relation over symmetric matrices, by an SVD nullspace.
///
/// For a member with `n` distinct real eigenvalues the returned basis has
/// exactly `n` elements.
pub fn sylvester_kernel(h: &LatticeHamiltonian) -> Result<Vec<DMatrix<f64>>, DieudonneError> {
    let n = h.n();
    let hd = h.dense();
    let ht = hd.transpose();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a..n).map(move |b| (a, b)))
        .collect();
    let q = pairs.len();
    let eq_count = n * (n - 1) / 2;
    let rows = eq_count.max(q);
    let mut m = DMatrix::zeros(rows, q);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for (col, &(a, b)) in pairs.iter().enumerate() {
        let mut s = DMatrix::zeros(n, n);
        if a == b {
            s[(a, a)] = 1.0;
        } else {
            s[(a, b)] = inv_sqrt2;
            s[(b, a)] = inv_sqrt2;
        }
        let img = &ht * &s - &s * &hd;
        let mut r = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                m[(r, col)] = img[(i, j)];
                r += 1;
            }
        }
    }
    let svd = nalgebra::SVD::try_new(m, false, true, f64::EPSILON, 10_000)
        .ok_or(DieudonneError::SvdFailed)?;
    let vt = svd.v_t.as_ref().ok_or(DieudonneError::SvdFailed)?;
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let tol = 1e-10 * smax.max(f64::MIN_POSITIVE);
    let mut basis = Vec::new();
    for (idx, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            continue;
        }
        let coeffs = vt.row(idx);
        let mut x = DMatrix::zeros(n, n);
        for (col, &(a, b)) in pairs.iter().enumerate() {
            let c = coeffs[col];
            if a == b {
                x[(a, a)] += c;
            } else {
                x[(a, b)] += c * inv_sqrt2;
                x[(b, a)] += c * inv_sqrt2;
            }
        }
        basis.push(x);
    }
    Ok(basis)
}

/// Spectral rank-one solutions `l·lᵀ` from the left eigenvectors, one per
/// eigenvalue in ascending order, each normalized to unit Frobenius norm
/// (equivalently: built from unit-norm eigenvectors).
pub fn rank_one_basis(h: &LatticeHamiltonian) -> Result<Vec<DMatrix<f64>>, DieudonneError> {
    let spec = Spectrum::compute(h)?;
    if spec.real_count() != h.n() {
        return Err(DieudonneError::DegenerateSpectrum);
    }
    let evs = spec.real_values();
    if evs.windows(2).any(|w| w[1] - w[0] < 1e-8) {
        return Err(DieudonneError::DegenerateSpectrum);
    }
    let mut out = Vec::with_capacity(evs.len());
    for &e in &evs {
        let pair = match eigenpair(h, e) {
            Ok(p) => p,
            Err(SpectraError::DegenerateEigenvalue(_)) => {
                return Err(DieudonneError::DegenerateSpectrum)
            }
            Err(other) => return Err(DieudonneError::Spectra(other)),
        };
        let m = &pair.left * pair.left.transpose();
        let norm = m.norm();
        out.push(m / norm);
    }
    Ok(out)
}

/// The three closed-form catalogue models for low-depth band solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaModel {
    /// Depth-1 catalogue: the 11-site, band-6 solution with tied couplings
    /// `(λ, λ)`.
    OneParam,
    /// Depth-2 catalogue: the 11-site, band-6 solution with couplings `(λ, μ)`.
    TwoParam,
    /// Depth-3 catalogue: the 13-site, band-7 solution with couplings
    /// `(λ, μ, ν)`.
    ThreeParam,
}

impl FormulaModel {
    /// Number of free parameters in the catalogue formulas.
    pub fn param_count(self) -> usize {
        match self {
            FormulaModel::OneParam => 1,
            FormulaModel::TwoParam => 2,
            FormulaModel::ThreeParam => 3,
        }
    }

    /// Lattice size of the documented display.
    pub fn lattice_size(self) -> usize {
        match self {
            FormulaModel::OneParam | FormulaModel::TwoParam => 11,
            FormulaModel::ThreeParam => 13,
        }
    }

    /// Band index of the documented display.
    pub fn band(self) -> usize {
        match self {
            FormulaModel::OneParam | FormulaModel::TwoParam => 6,
            FormulaModel::ThreeParam => 7,
        }
    }

    /// Coupling parameters of the lattice member the catalogue describes.
    pub fn couplings(self, params: &[Rational]) -> Vec<Rational> {
        match self {
            FormulaModel::OneParam => vec![params[0].clone(), params[0].clone()],
            FormulaModel::TwoParam | FormulaModel::ThreeParam => params.to_vec(),
        }
    }

    fn check_params(self, params: &[Rational]) -> Result<(), DieudonneError> {
        if params.len() != self.param_count() {
            return Err(DieudonneError::WrongParameterCount {
                model: self,
                expected: self.param_count(),
                got: params.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for FormulaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormulaModel::OneParam => "one_param",
            FormulaModel::TwoParam => "two_param",
            FormulaModel::ThreeParam => "three_param",
        })
    }
}

/// Exact values of the named catalogue entries at the given parameters.
pub fn formula_elements(
    model: FormulaModel,
    params: &[Rational],
) -> Result<BTreeMap<&'static str, Rational>, DieudonneError> {
    model.check_params(params)?;
    let one = Rational::one;
    let sq = |x: &Rational| x * x;
    let mut out = BTreeMap::new();
    match model {
        FormulaModel::OneParam => {
            let l = &params[0];
            let den = one() + Rational::from_integer(3) * sq(l);
            out.insert("r", (one() - sq(l)) / &den);
            out.insert("s", (one() + l) / &den);
            out.insert("v", one() / &den);
            out.insert("t", (one() + sq(l)) / &den);
            out.insert("w", (one() + Rational::from_integer(2) * sq(l)) / &den);
        }
        FormulaModel::TwoParam => {
            let (l, mu) = (&params[0], &params[1]);
            let den = one() + sq(l) + Rational::from_integer(2) * sq(mu);
            out.insert("r", (one() + mu) * (one() - l) / &den);
            out.insert("s", (one() + mu) / &den);
            out.insert("v", one() / &den);
            out.insert("t", (one() + sq(l)) / &den);
            out.insert("w", (one() + sq(l) + sq(mu)) / &den);
        }
        FormulaModel::ThreeParam => {
            let (l, mu, nu) = (&params[0], &params[1], &params[2]);
            let den = one()
                + sq(l)
                + Rational::from_integer(2) * sq(mu)
                + Rational::from_integer(3) * sq(nu)
                + sq(nu) * sq(l);
            out.insert("r", (one() - nu) * (one() + mu) * (one() - l) / &den);
            out.insert("s", (one() - nu) * (one() + mu) / &den);
            out.insert("p", (one() - nu) / &den);
            out.insert("v", one() / &den);
            out.insert("t", (one() - nu) * (one() + sq(l)) / &den);
            out.insert("q", (one() + sq(mu) + sq(l)) / &den);
            out.insert("w", (one() + sq(mu) + sq(nu) + sq(l)) / &den);
            out.insert("m", one() - Rational::from_integer(2) * sq(nu) / &den);
            out.insert("u", one() - sq(nu) / &den);
        }
    }
    Ok(out)
}

/// Documented element placement (0-based, one representative per orbit; the
/// full matrix is the closure under transpose and point reflection). The name
/// `"1"` marks the central unit entry.
fn layout(model: FormulaModel) -> &'static [(usize, usize, &'static str)] {
    match model {
        FormulaModel::OneParam | FormulaModel::TwoParam => &[
            (0, 5, "r"),
            (1, 4, "s"),
            (1, 6, "s"),
            (2, 3, "v"),
            (2, 5, "t"),
            (2, 7, "v"),
            (3, 4, "w"),
            (3, 6, "w"),
            (4, 5, "1"),
        ],
        FormulaModel::ThreeParam => &[
            (0, 6, "r"),
            (1, 5, "s"),
            (1, 7, "s"),
            (2, 4, "p"),
            (2, 6, "t"),
            (2, 8, "p"),
            (3, 3, "v"),
            (3, 5, "q"),
            (3, 7, "q"),
            (3, 9, "v"),
            (4, 4, "w"),
            (4, 6, "m"),
            (4, 8, "w"),
            (5, 5, "u"),
            (5, 7, "u"),
            (6, 6, "1"),
        ],
    }
}

/// The closed-form catalogue solution as a full exact matrix.
pub fn formula_matrix(
    model: FormulaModel,
    params: &[Rational],
) -> Result<RationalMatrix, DieudonneError> {
    let elements = formula_elements(model, params)?;
    let n = model.lattice_size();
    let mut x = RationalMatrix::zeros(n, n);
    for &(i, j, name) in layout(model) {
        let val = if name == "1" {
            Rational::one()
        } else {
            elements[name].clone()
        };
        for (a, b) in [
            (i, j),
            (j, i),
            (n - 1 - i, n - 1 - j),
            (n - 1 - j, n - 1 - i),
        ] {
            x[(a, b)] = val.clone();
        }
    }
    Ok(x)
}

/// One entry where the catalogue and the kernel solver disagree.
#[derive(Debug, Clone, Serialize)]
pub struct EntryMismatch {
    pub row: usize,
    pub col: usize,
    pub catalogue: String,
    pub kernel: String,
}

/// Outcome of checking a closed-form catalogue against the exact kernel
/// solver, entry by entry with exact rational equality.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub model: FormulaModel,
    pub lattice_size: usize,
    pub band: usize,
    pub params: Vec<String>,
    pub elements: BTreeMap<String, String>,
    pub matches: bool,
    pub checked_entries: usize,
    pub mismatches: Vec<EntryMismatch>,
}

/// Compare the closed-form catalogue for `model` at `params` against the
/// independently computed exact band solution of the matching lattice member.
pub fn verify_formulas(
    model: FormulaModel,
    params: &[Rational],
) -> Result<VerificationReport, DieudonneError> {
    model.check_params(params)?;
    let n = model.lattice_size();
    let k = model.band();
    let catalogue = formula_matrix(model, params)?;
    let kernel = banded_pseudometric_exact(n, &model.couplings(params), k)?;
    let mut mismatches = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if catalogue[(i, j)] != kernel[(i, j)] {
                mismatches.push(EntryMismatch {
                    row: i,
                    col: j,
                    catalogue: catalogue[(i, j)].to_string(),
                    kernel: kernel[(i, j)].to_string(),
                });
            }
        }
    }
    let elements = formula_elements(model, params)?
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    Ok(VerificationReport {
        model,
        lattice_size: n,
        band: k,
        params: params.iter().map(Rational::to_string).collect(),
        elements,
        matches: mismatches.is_empty(),
        checked_entries: n * n,
        mismatches,
    })
}

/// One named element that fails to reduce.
#[derive(Debug, Clone, Serialize)]
pub struct ElementMismatch {
    pub element: String,
    pub from_value: String,
    pub to_value: String,
}

/// Outcome of an element-level reduction check between catalogue models.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub from: FormulaModel,
    pub to: FormulaModel,
    pub params: Vec<String>,
    pub matches: bool,
    pub mismatches: Vec<ElementMismatch>,
}

/// Check the element-level reduction between catalogue models at a parameter
/// point: the depth-3 catalogue at `ν = 0` collapses onto the depth-2 one, and
/// the depth-2 catalogue at `μ = λ` onto the depth-1 one. At parameter points
/// that do not satisfy the constraint the report simply records which elements
/// differ.
pub fn verify_reduction(
    from: FormulaModel,
    params: &[Rational],
    to: FormulaModel,
) -> Result<ReductionReport, DieudonneError> {
    from.check_params(params)?;
    let from_el = formula_elements(from, params)?;
    // element name in `from` → (element name in `to` or the literal unit)
    let (to_params, pairs): (Vec<Rational>, Vec<(&str, Option<&str>)>) = match (from, to) {
        (FormulaModel::TwoParam, FormulaModel::OneParam) => (
            vec![params[0].clone()],
            vec![
                ("r", Some("r")),
                ("s", Some("s")),
                ("v", Some("v")),
                ("t", Some("t")),
                ("w", Some("w")),
            ],
        ),
        (FormulaModel::ThreeParam, FormulaModel::TwoParam) => (
            vec![params[0].clone(), params[1].clone()],
            vec![
                ("r", Some("r")),
                ("s", Some("s")),
                ("p", Some("v")),
                ("t", Some("t")),
                ("q", Some("w")),
                ("w", Some("w")),
                ("m", None),
                ("u", None),
            ],
        ),
        _ => return Err(DieudonneError::InvalidReduction { from, to }),
    };
    let to_el = formula_elements(to, &to_params)?;
    let mut mismatches = Vec::new();
    for (name, target) in pairs {
        let lhs = &from_el[name];
        let rhs = match target {
            Some(t) => to_el[t].clone(),
            None => Rational::one(),
        };
        if lhs != &rhs {
            mismatches.push(ElementMismatch {
                element: match target {
                    Some(t) if t != name => format!("{name} -> {t}"),
                    _ => name.to_string(),
                },
                from_value: lhs.to_string(),
                to_value: rhs.to_string(),
            });
        }
    }
    Ok(ReductionReport {
        from,
        to,
        params: params.iter().map(Rational::to_string).collect(),
        matches: mismatches.is_empty(),
        mismatches,
    })
}
