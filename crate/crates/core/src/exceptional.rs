//! Parameter sweeps, reality-domain boundaries, and refinement of the points
//! where real eigenvalue pairs merge and complexify.
//!
//! A [`ParameterPath`] reduces the multi-parameter coupling space to a single
//! driver value: each coupling is an affine function of the driver (the
//! driver itself, a linked parameter such as `μ = λ + 0.25`, or a constant).
//! Along such a path the number of real eigenvalues is an integer-valued step
//! function of the driver, so boundaries of the real-spectrum region can be
//! located by bisection on that count — robust even where the eigenvalues
//! themselves are ill-conditioned, which is exactly what happens at a merge
//! point.

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{CouplingVector, LatticeError, LatticeHamiltonian};
use crate::spectra::{SpectraError, Spectrum, DEFAULT_TOL_REAL};

/// Bisection stops once the bracket is narrower than this.
pub const DEFAULT_BISECTION_TOL: f64 = 1e-8;

/// Errors from sweeps and boundary refinement.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExceptionalError {
    /// A parameter index fell outside the coupling depth.
    #[error("parameter index {index} is outside the coupling depth {depth}")]
    DriverOutOfRange { index: usize, depth: usize },
    /// Affine linkage coefficients must be finite.
    #[error("linkage coefficients must be finite")]
    NonFiniteLinkage,
    /// A linkage entry tried to overwrite the swept parameter.
    #[error("linkage may not retarget the driver parameter (index {0})")]
    LinkageTargetsDriver(usize),
    /// Sweeps need a forward range and at least two grid points.
    #[error("invalid sweep range: lo={lo}, hi={hi}, steps={steps} (need finite lo < hi and steps >= 2)")]
    InvalidRange { lo: f64, hi: f64, steps: usize },
    /// Both bracket ends have the same number of real eigenvalues.
    #[error("real eigenvalue count is {count} at both bracket ends; no transition to locate")]
    NoSignChange { count: usize },
    /// A midpoint count matched neither bracket end: the bracket holds more
    /// than one transition.
    #[error("bracket contains more than one reality transition (count {mid} at driver value {at} matches neither end)")]
    MultipleTransitions { at: f64, mid: usize },
    /// The eigenvalue solver failed at a particular driver value.
    #[error("eigenvalue solver failed at driver value {at}: {source}")]
    SolverFailure {
        at: f64,
        #[source]
        source: SpectraError,
    },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// The affine function `x ↦ slope·x + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineMap {
    pub slope: f64,
    pub offset: f64,
}

impl AffineMap {
    pub fn new(slope: f64, offset: f64) -> Self {
        AffineMap { slope, offset }
    }

    /// The constant function `x ↦ c`.
    pub fn constant(c: f64) -> Self {
        AffineMap {
            slope: 0.0,
            offset: c,
        }
    }

    /// The identity `x ↦ x`.
    pub fn identity() -> Self {
        AffineMap {
            slope: 1.0,
            offset: 0.0,
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.slope * x + self.offset
    }

    fn is_finite(&self) -> bool {
        self.slope.is_finite() && self.offset.is_finite()
    }
}

/// A one-dimensional line through the coupling space: every coupling is an
/// affine function of a single driver value.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPath {
    maps: Vec<AffineMap>,
    driver: usize,
}

impl ParameterPath {
    /// General constructor: couplings default to their `base` values, the
    /// `driver` coupling takes the swept value itself, and each `(index, map)`
    /// linkage entry ties another coupling to the driver.
    pub fn new(
        base: &CouplingVector,
        driver: usize,
        linkage: &[(usize, AffineMap)],
    ) -> Result<Self, ExceptionalError> {
        let depth = base.depth();
        if driver >= depth {
            return Err(ExceptionalError::DriverOutOfRange {
                index: driver,
                depth,
            });
        }
        let mut maps: Vec<AffineMap> = base.params().iter().map(|&b| AffineMap::constant(b)).collect();
        maps[driver] = AffineMap::identity();
        for &(d, m) in linkage {
            if d >= depth {
                return Err(ExceptionalError::DriverOutOfRange { index: d, depth });
            }
            if d == driver {
                return Err(ExceptionalError::LinkageTargetsDriver(d));
            }
            maps[d] = m;
        }
        if maps.iter().any(|m| !m.is_finite()) {
            return Err(ExceptionalError::NonFiniteLinkage);
        }
        Ok(ParameterPath { maps, driver })
    }

    /// Depth-1 path: the single coupling is the driver.
    pub fn single() -> Self {
        ParameterPath {
            maps: vec![AffineMap::identity()],
            driver: 0,
        }
    }

    /// Depth-2 path with both couplings tied to the same driver value.
    pub fn tied_pair() -> Self {
        ParameterPath {
            maps: vec![AffineMap::identity(), AffineMap::identity()],
            driver: 0,
        }
    }

    /// Depth-2 path with the second coupling at a constant shift from the
    /// first: `(λ, λ + offset)`.
    pub fn offset_pair(offset: f64) -> Result<Self, ExceptionalError> {
        if !offset.is_finite() {
            return Err(ExceptionalError::NonFiniteLinkage);
        }
        Ok(ParameterPath {
            maps: vec![AffineMap::identity(), AffineMap::new(1.0, offset)],
            driver: 0,
        })
    }

    /// Sweep one coupling of a fixed template, holding the others constant.
    pub fn sweep_one(base: &CouplingVector, driver: usize) -> Result<Self, ExceptionalError> {
        ParameterPath::new(base, driver, &[])
    }

    pub fn depth(&self) -> usize {
        self.maps.len()
    }

    pub fn driver(&self) -> usize {
        self.driver
    }

    /// The affine function giving coupling `d` in terms of the driver value.
    pub fn map(&self, d: usize) -> AffineMap {
        self.maps[d]
    }

    /// Couplings at driver value `x`.
    pub fn params_at(&self, x: f64) -> CouplingVector {
        CouplingVector::new(self.maps.iter().map(|m| m.apply(x)).collect::<Vec<f64>>())
    }
}

/// Spectra tabulated along a path at equally spaced driver values.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub n: usize,
    pub path: ParameterPath,
    pub grid: Vec<f64>,
    pub rows: Vec<Spectrum>,
}

impl SweepTable {
    /// Number of real eigenvalues at each grid point.
    pub fn real_counts(&self) -> Vec<usize> {
        self.rows.iter().map(Spectrum::real_count).collect()
    }
}

fn spectrum_at(
    n: usize,
    path: &ParameterPath,
    x: f64,
    tol_real: f64,
) -> Result<Spectrum, ExceptionalError> {
    let h = LatticeHamiltonian::new(n, &path.params_at(x))?;
    Spectrum::compute_with_tol(&h, tol_real)
        .map_err(|source| ExceptionalError::SolverFailure { at: x, source })
}

/// Tabulate spectra at `steps` equally spaced driver values in `[lo, hi]`.
pub fn sweep(
    n: usize,
    path: &ParameterPath,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<SweepTable, ExceptionalError> {
    sweep_with_tol(n, path, lo, hi, steps, DEFAULT_TOL_REAL)
}

/// [`sweep`] with an explicit reality tolerance for classifying eigenvalues.
pub fn sweep_with_tol(
    n: usize,
    path: &ParameterPath,
    lo: f64,
    hi: f64,
    steps: usize,
    tol_real: f64,
) -> Result<SweepTable, ExceptionalError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || steps < 2 {
        return Err(ExceptionalError::InvalidRange { lo, hi, steps });
    }
    let h = (hi - lo) / (steps - 1) as f64;
    let mut grid = Vec::with_capacity(steps);
    let mut rows = Vec::with_capacity(steps);
    for i in 0..steps {
        let x = if i == steps - 1 { hi } else { lo + h * i as f64 };
        rows.push(spectrum_at(n, path, x, tol_real)?);
        grid.push(x);
    }
    Ok(SweepTable {
        n,
        path: path.clone(),
        grid,
        rows,
    })
}

/// Result of narrowing a bracket around a real-count transition.
struct RefinedBracket {
    lo: f64,
    hi: f64,
    count_lo: usize,
    count_hi: usize,
    /// Count on the side with more real eigenvalues (the "rich" side).
    rich_count: usize,
    /// Whether the rich side is the low end of the bracket.
    rich_at_lo: bool,
}

/// Bisect on membership of the richer side: the invariant is that one bracket
/// end always has the larger real count of the two original ends, the other
/// end anything else. With `strict` set, a midpoint count matching neither
/// original end aborts with [`ExceptionalError::MultipleTransitions`];
/// otherwise such counts simply belong to the poor side, so the bisection
/// still converges to the boundary of the rich region.
fn refine_transition(
    n: usize,
    path: &ParameterPath,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    tol_real: f64,
    strict: bool,
) -> Result<RefinedBracket, ExceptionalError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(ExceptionalError::InvalidRange { lo, hi, steps: 2 });
    }
    let count_lo = spectrum_at(n, path, lo, tol_real)?.real_count();
    let count_hi = spectrum_at(n, path, hi, tol_real)?.real_count();
    if count_lo == count_hi {
        return Err(ExceptionalError::NoSignChange { count: count_lo });
    }
    let rich_at_lo = count_lo > count_hi;
    let rich_count = count_lo.max(count_hi);
    let poor_count = count_lo.min(count_hi);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket exhausted at float resolution
        }
        let c = spectrum_at(n, path, mid, tol_real)?.real_count();
        if strict && c != rich_count && c != poor_count {
            // Exactly at a merge point the defective eigenvalues are
            // perturbed like sqrt(machine epsilon), so a grid point landing
            // on the transition itself can show an in-between count. That
            // anomaly is confined to the immediate neighborhood: if stepping
            // half a tolerance to either side restores the two bracket
            // counts, the transition is right here; otherwise the bracket
            // genuinely holds more than one transition.
            let kappa = (0.5 * tol).max(mid.abs() * 4.0 * f64::EPSILON);
            let c_minus = spectrum_at(n, path, mid - kappa, tol_real)?.real_count();
            let c_plus = spectrum_at(n, path, mid + kappa, tol_real)?.real_count();
            let (want_minus, want_plus) = if rich_at_lo {
                (rich_count, poor_count)
            } else {
                (poor_count, rich_count)
            };
            if c_minus == want_minus && c_plus == want_plus {
                lo = mid - kappa;
                hi = mid + kappa;
                continue;
            }
            return Err(ExceptionalError::MultipleTransitions { at: mid, mid: c });
        }
        if (c == rich_count) == rich_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RefinedBracket {
        lo,
        hi,
        count_lo,
        count_hi,
        rich_count,
        rich_at_lo,
    })
}

/// Locate the boundary of the richer-spectrum region inside the bracket by
/// bisection on the integer real-eigenvalue count, to within `tol`.
///
/// The two bracket ends must have different counts. The returned value is the
/// edge of the region (connected to the richer end) where the count still
/// equals the richer end's count.
pub fn reality_boundary(
    n: usize,
    path: &ParameterPath,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64, ExceptionalError> {
    reality_boundary_with_tols(n, path, lo, hi, tol, DEFAULT_TOL_REAL)
}

/// [`reality_boundary`] with an explicit reality tolerance.
pub fn reality_boundary_with_tols(
    n: usize,
    path: &ParameterPath,
    lo: f64,
    hi: f64,
    tol: f64,
    tol_real: f64,
) -> Result<f64, ExceptionalError> {
    let r = refine_transition(n, path, lo, hi, tol, tol_real, false)?;
    Ok(0.5 * (r.lo + r.hi))
}

/// A refined merge point: where eigenvalues leave the real axis.
#[derive(Debug, Clone, Serialize)]
pub struct EPLocation {
    /// Refined driver value of the transition.
    pub driver_value: f64,
    /// Indices (into the ascending real eigenvalues on the real side) of the
    /// closest adjacent pair — the eigenvalues that merge.
    pub colliding_pair: (usize, usize),
    /// Gap between that pair at the refined real-side end of the bracket.
    pub gap_at_star: f64,
    /// Real eigenvalue count on the real (richer) side.
    pub count_real_side: usize,
    /// Real eigenvalue count on the complexified (poorer) side.
    pub count_complex_side: usize,
}

/// Refine a single merge transition inside the bracket and identify the
/// colliding eigenvalue pair.
///
/// The count must change between the bracket ends and the bracket must hold a
/// single transition: if a midpoint count matches neither end, the refinement
/// aborts with [`ExceptionalError::MultipleTransitions`]. The count is allowed
/// to drop by any even number at the transition (simultaneous merges mirrored
/// about the spectrum center arrive together).
pub fn ep_refine(
    n: usize,
    path: &ParameterPath,
    lo: f64,
    hi: f64,
) -> Result<EPLocation, ExceptionalError> {
    ep_refine_with_tols(n, path, lo, hi, DEFAULT_BISECTION_TOL, DEFAULT_TOL_REAL)
}

/// [`ep_refine`] with explicit bisection and reality tolerances.
pub fn ep_refine_with_tols(
    n: usize,
    path: &ParameterPath,
    lo: f64,
    hi: f64,
    tol: f64,
    tol_real: f64,
) -> Result<EPLocation, ExceptionalError> {
    let r = refine_transition(n, path, lo, hi, tol, tol_real, true)?;
    let real_end = if r.rich_at_lo { r.lo } else { r.hi };
    let spectrum = spectrum_at(n, path, real_end, tol_real)?;
    let reals = spectrum.real_values();
    let mut pair = (0usize, 1usize);
    let mut gap = f64::INFINITY;
    for i in 0..reals.len().saturating_sub(1) {
        let g = reals[i + 1] - reals[i];
        if g < gap {
            gap = g;
            pair = (i, i + 1);
        }
    }
    Ok(EPLocation {
        driver_value: 0.5 * (r.lo + r.hi),
        colliding_pair: pair,
        gap_at_star: gap,
        count_real_side: r.rich_count,
        count_complex_side: r.count_lo.min(r.count_hi),
    })
}

/// Driver values where some squared coupling along the path crosses `1`, i.e.
/// where a sub/super-diagonal product `1 − p_d²` vanishes — the closed-form
/// candidates for reality loss. Constant couplings contribute no isolated
/// zeros. Sorted ascending, duplicates removed.
pub fn symmetrizability_boundary(path: &ParameterPath) -> Vec<f64> {
    let mut out = Vec::new();
    for d in 0..path.depth() {
        let m = path.map(d);
        if m.slope != 0.0 {
            out.push((1.0 - m.offset) / m.slope);
            out.push((-1.0 - m.offset) / m.slope);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn paths_evaluate_their_documented_couplings() {
        let p = ParameterPath::offset_pair(0.25).unwrap();
        assert_eq!(p.params_at(0.5).params(), &[0.5, 0.75]);
        let t = ParameterPath::tied_pair();
        assert_eq!(t.params_at(0.3).params(), &[0.3, 0.3]);
        let base = CouplingVector::new(vec![0.1, 0.7]);
        let s = ParameterPath::sweep_one(&base, 0).unwrap();
        assert_eq!(s.params_at(0.4).params(), &[0.4, 0.7]);
        assert_eq!(s.depth(), 2);
        assert_eq!(s.driver(), 0);
    }

    #[test]
    fn path_validation_rejects_bad_input() {
        let base = CouplingVector::new(vec![0.1, 0.2]);
        assert!(matches!(
            ParameterPath::new(&base, 5, &[]),
            Err(ExceptionalError::DriverOutOfRange { index: 5, depth: 2 })
        ));
        assert!(matches!(
            ParameterPath::new(&base, 0, &[(3, AffineMap::identity())]),
            Err(ExceptionalError::DriverOutOfRange { index: 3, depth: 2 })
        ));
        assert!(matches!(
            ParameterPath::new(&base, 0, &[(0, AffineMap::identity())]),
            Err(ExceptionalError::LinkageTargetsDriver(0))
        ));
        assert!(matches!(
            ParameterPath::new(&base, 0, &[(1, AffineMap::new(f64::NAN, 0.0))]),
            Err(ExceptionalError::NonFiniteLinkage)
        ));
        assert!(matches!(
            ParameterPath::offset_pair(f64::INFINITY),
            Err(ExceptionalError::NonFiniteLinkage)
        ));
    }

    #[test]
    fn tied_sweep_stays_real_strictly_inside_the_unit_interval() {
        let table = sweep(11, &ParameterPath::tied_pair(), -0.9, 0.9, 19).unwrap();
        assert_eq!(table.grid.len(), 19);
        assert!(table.real_counts().iter().all(|&c| c == 11));
    }

    #[test]
    fn offset_sweep_loses_reality_before_the_unit_interval_ends() {
        let path = ParameterPath::offset_pair(0.25).unwrap();
        let table = sweep(11, &path, 0.8, 0.95, 4).unwrap();
        assert!(table.real_counts().iter().any(|&c| c < 11));
    }

    #[test]
    fn three_site_sweep_keeps_the_middle_eigenvalue_pinned() {
        let table = sweep(3, &ParameterPath::single(), 0.0, 0.5, 6).unwrap();
        for row in &table.rows {
            let reals = row.real_values();
            assert!(
                reals.iter().any(|&e| (e - 2.0).abs() < 1e-11),
                "no eigenvalue at the spectrum center in {reals:?}"
            );
        }
    }

    #[test]
    fn sweep_grids_are_exact_at_the_ends_and_increasing() {
        let table = sweep(5, &ParameterPath::single(), 0.1, 0.3, 7).unwrap();
        assert_eq!(table.grid[0], 0.1);
        assert_eq!(*table.grid.last().unwrap(), 0.3);
        assert!(table.grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sweep_rejects_bad_ranges() {
        let p = ParameterPath::single();
        assert!(matches!(
            sweep(5, &p, 0.5, 0.1, 10),
            Err(ExceptionalError::InvalidRange { .. })
        ));
        assert!(matches!(
            sweep(5, &p, 0.1, 0.5, 1),
            Err(ExceptionalError::InvalidRange { .. })
        ));
        assert!(matches!(
            sweep(5, &p, f64::NAN, 0.5, 10),
            Err(ExceptionalError::InvalidRange { .. })
        ));
    }

    #[test]
    fn tied_boundary_sits_at_the_unit_coupling() {
        let b = reality_boundary(11, &ParameterPath::tied_pair(), 0.9, 1.1, 1e-8).unwrap();
        assert_abs_diff_eq!(b, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn offset_boundary_on_the_negative_side_sits_at_minus_one() {
        let path = ParameterPath::offset_pair(0.25).unwrap();
        let b = reality_boundary(11, &path, -1.2, -0.8, 1e-8).unwrap();
        assert_abs_diff_eq!(b, -1.0, epsilon = 1e-6);
    }

    #[test]
    fn offset_boundary_on_the_positive_side_is_where_full_reality_first_fails() {
        // The full 11-real region ends measurably past the coupling-product
        // zero at 0.75; this pins the measured location.
        let path = ParameterPath::offset_pair(0.25).unwrap();
        let b = reality_boundary(11, &path, 0.5, 1.0, 1e-8).unwrap();
        assert_abs_diff_eq!(b, 0.757_327_673_155_032_2, epsilon = 1e-6);
    }

    #[test]
    fn boundary_requires_a_count_change() {
        assert!(matches!(
            reality_boundary(11, &ParameterPath::tied_pair(), 0.0, 0.5, 1e-8),
            Err(ExceptionalError::NoSignChange { count: 11 })
        ));
    }

    #[test]
    fn single_coupling_merge_point_is_refined_with_its_pair() {
        let ep = ep_refine(11, &ParameterPath::single(), 0.95, 1.05).unwrap();
        assert_abs_diff_eq!(ep.driver_value, 1.0, epsilon = 1e-6);
        assert_eq!(ep.colliding_pair, (4, 5));
        assert_eq!(ep.count_real_side, 11);
        assert_eq!(ep.count_complex_side, 9);
        // The refined end can land exactly on the merge point, where the gap
        // closes completely.
        assert!(ep.gap_at_star >= 0.0 && ep.gap_at_star < 1e-2);
    }

    #[test]
    fn tied_merge_point_drops_two_pairs_at_once() {
        let ep = ep_refine(11, &ParameterPath::tied_pair(), 0.9, 1.1).unwrap();
        assert_abs_diff_eq!(ep.driver_value, 1.0, epsilon = 1e-6);
        assert_eq!(ep.count_real_side, 11);
        assert_eq!(ep.count_complex_side, 7);
    }

    #[test]
    fn three_site_merge_point_is_refined() {
        let ep = ep_refine(3, &ParameterPath::single(), 0.9, 1.1).unwrap();
        assert_abs_diff_eq!(ep.driver_value, 1.0, epsilon = 1e-6);
        assert_eq!(ep.count_real_side, 3);
        assert_eq!(ep.count_complex_side, 1);
    }

    #[test]
    fn stacked_transitions_are_reported_not_refined() {
        let path = ParameterPath::offset_pair(0.25).unwrap();
        assert!(matches!(
            ep_refine(11, &path, 0.5, 1.0),
            Err(ExceptionalError::MultipleTransitions { .. })
        ));
    }

    #[test]
    fn merge_refinement_requires_a_count_change() {
        assert!(matches!(
            ep_refine(11, &ParameterPath::offset_pair(0.25).unwrap(), 0.0, 0.5),
            Err(ExceptionalError::NoSignChange { count: 11 })
        ));
    }

    #[test]
    fn coupling_product_zeros_are_solved_in_closed_form() {
        assert_eq!(symmetrizability_boundary(&ParameterPath::single()), vec![-1.0, 1.0]);
        let path = ParameterPath::offset_pair(0.25).unwrap();
        assert_eq!(
            symmetrizability_boundary(&path),
            vec![-1.25, -1.0, 0.75, 1.0]
        );
        // Constant couplings contribute no zeros.
        let base = CouplingVector::new(vec![0.3, 0.0]);
        let fixed = ParameterPath::sweep_one(&base, 0).unwrap();
        assert_eq!(symmetrizability_boundary(&fixed), vec![-1.0, 1.0]);
    }
}
