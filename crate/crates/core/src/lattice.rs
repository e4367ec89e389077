//! Tridiagonal lattice Hamiltonians with boundary-localized couplings.
//!
//! The family is the discrete Laplacian on `n` sites (diagonal `2`,
//! off-diagonals `-1`) with the `K` outermost off-diagonal pairs at each end
//! antisymmetrically detuned: at depth `d` (counting inward from `1`) the
//! super/sub-diagonal pair becomes `-1 - s_d` / `-1 + s_d` at the top and
//! mirrored at the bottom, with the alternating sign convention
//! `s_d = (-1)^(d+1) p_d` applied to the coupling parameters `p_1..p_K`.
//!
//! Every member is real and centrosymmetric up to transposition: reversing the
//! site order maps the matrix onto itself, `P·H·P = H`, which is the antilinear
//! symmetry of the family written for real entries. The matrices are
//! non-Hermitian whenever some `p_d` is nonzero, yet their spectra stay real
//! while every product `(−1−s_d)(−1+s_d) = 1 − p_d²` stays positive.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use nalgebra::DMatrix;
use num::{One, Zero};
use thiserror::Error;

/// Errors when constructing lattice Hamiltonians.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    /// Couplings of depth `K` need at least `2K + 1` sites so the two
    /// boundary regions do not overlap.
    #[error("coupling depth {depth} needs at least {min} sites, got {n}", min = 2 * depth + 1)]
    DepthTooLarge { n: usize, depth: usize },
}

/// Coupling parameters `(p_1, ..., p_K)`, outermost first.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingVector(Vec<f64>);

impl CouplingVector {
    pub fn new(params: impl Into<Vec<f64>>) -> Self {
        CouplingVector(params.into())
    }

    /// Depth-1 couplings `(lambda)`.
    pub fn single(lambda: f64) -> Self {
        CouplingVector(vec![lambda])
    }

    /// Depth-2 couplings `(lambda, mu)`.
    pub fn pair(lambda: f64, mu: f64) -> Self {
        CouplingVector(vec![lambda, mu])
    }

    /// Depth-3 couplings `(lambda, mu, nu)`.
    pub fn triple(lambda: f64, mu: f64, nu: f64) -> Self {
        CouplingVector(vec![lambda, mu, nu])
    }

    /// Number of coupled off-diagonal positions per end.
    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.0
    }
}

/// Super- and sub-diagonal entries (in that order) of the family member with
/// `n` sites and the given couplings, over any ring providing the operations
/// the construction uses.
///
/// Entry `i` (0-based) sits between sites `i` and `i + 1`; interior entries
/// are `-1`. Generic so the same construction feeds both the floating-point
/// solvers and the exact rational ones.
pub(crate) fn offdiagonals<T>(n: usize, params: &[T]) -> Result<(Vec<T>, Vec<T>), LatticeError>
where
    T: Clone + Zero + One + Neg<Output = T> + Add<Output = T> + Sub<Output = T>,
{
    let depth = params.len();
    if n < 2 * depth + 1 {
        return Err(LatticeError::DepthTooLarge { n, depth });
    }
    let neg_one = -T::one();
    let mut sup = vec![neg_one.clone(); n - 1];
    let mut sub = vec![neg_one.clone(); n - 1];
    for (i, p) in params.iter().enumerate() {
        let d = i + 1;
        let s = if d % 2 == 1 { p.clone() } else { -p.clone() };
        sup[d - 1] = neg_one.clone() - s.clone();
        sub[d - 1] = neg_one.clone() + s.clone();
        sup[n - 1 - d] = neg_one.clone() + s.clone();
        sub[n - 1 - d] = neg_one.clone() - s;
    }
    Ok((sup, sub))
}

/// A member of the boundary-coupled tridiagonal family.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeHamiltonian {
    n: usize,
    diag: Vec<f64>,
    sup: Vec<f64>,
    sub: Vec<f64>,
}

impl LatticeHamiltonian {
    /// Build the `n`-site member with the given couplings.
    pub fn new(n: usize, couplings: &CouplingVector) -> Result<Self, LatticeError> {
        let (sup, sub) = offdiagonals(n, couplings.params())?;
        Ok(LatticeHamiltonian {
            n,
            diag: vec![2.0; n],
            sup,
            sub,
        })
    }

    /// Matrix dimension (number of lattice sites).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Main diagonal, length `n`.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Superdiagonal `H[i][i+1]`, length `n - 1`.
    pub fn sup(&self) -> &[f64] {
        &self.sup
    }

    /// Subdiagonal `H[i+1][i]`, length `n - 1`.
    pub fn sub(&self) -> &[f64] {
        &self.sub
    }

    /// Products `H[i][i+1]·H[i+1][i]`; their signs decide whether a diagonal
    /// symmetrization (and hence a proof of spectral reality) exists.
    pub fn offdiagonal_products(&self) -> Vec<f64> {
        self.sup
            .iter()
            .zip(&self.sub)
            .map(|(a, b)| a * b)
            .collect()
    }

    /// Dense copy.
    pub fn dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            m[(i, i)] = self.diag[i];
        }
        for i in 0..self.n - 1 {
            m[(i, i + 1)] = self.sup[i];
            m[(i + 1, i)] = self.sub[i];
        }
        m
    }

    /// The adjoint: for real matrices this is the transpose, which swaps the
    /// two off-diagonals.
    pub fn adjoint(&self) -> LatticeHamiltonian {
        LatticeHamiltonian {
            n: self.n,
            diag: self.diag.clone(),
            sup: self.sub.clone(),
            sub: self.sup.clone(),
        }
    }

    /// Whether `P·H·P` equals `H` entrywise within `tol`, `P` being the site
    /// reversal. Members of the family satisfy this exactly by construction.
    pub fn is_pt_symmetric(&self, tol: f64) -> bool {
        let m = self.n - 1;
        let diag_ok = (0..self.n).all(|i| (self.diag[i] - self.diag[self.n - 1 - i]).abs() <= tol);
        // Reversal maps the superdiagonal entry at position i to the
        // subdiagonal entry at position m - 1 - i and vice versa.
        let off_ok = (0..m).all(|i| {
            (self.sup[i] - self.sub[m - 1 - i]).abs() <= tol
                && (self.sub[i] - self.sup[m - 1 - i]).abs() <= tol
        });
        diag_ok && off_ok
    }
}

impl fmt::Display for LatticeHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.dense();
        let texts: Vec<String> = m.iter().map(|x| format!("{x}")).collect();
        let width = texts.iter().map(String::len).max().unwrap_or(1);
        for i in 0..self.n {
            for j in 0..self.n {
                if j > 0 {
                    write!(f, " ")?;
                }
                // nalgebra iterates column-major; index directly instead.
                write!(f, "{:>width$}", format!("{}", m[(i, j)]))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Dense parity (site-reversal) matrix: ones on the antidiagonal.
pub fn parity(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i + j == n - 1 { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_parameter_member_has_the_documented_entries() {
        let h = LatticeHamiltonian::new(11, &CouplingVector::pair(0.3, 0.2)).unwrap();
        let m = h.dense();
        assert_eq!(m[(0, 0)], 2.0);
        assert_eq!(m[(0, 1)], -1.0 - 0.3);
        assert_eq!(m[(1, 0)], -1.0 + 0.3);
        // Depth 2 carries the opposite sign: s_2 = -mu.
        assert_eq!(m[(1, 2)], -1.0 + 0.2);
        assert_eq!(m[(2, 1)], -1.0 - 0.2);
        // Interior entries are plain Laplacian.
        assert_eq!(m[(4, 5)], -1.0);
        assert_eq!(m[(5, 4)], -1.0);
        // Bottom end mirrors the top.
        assert_eq!(m[(9, 10)], -1.0 + 0.3);
        assert_eq!(m[(10, 9)], -1.0 - 0.3);
        assert_eq!(m[(8, 9)], -1.0 - 0.2);
        assert_eq!(m[(9, 8)], -1.0 + 0.2);
    }

    #[test]
    fn zero_couplings_give_the_discrete_laplacian() {
        let h = LatticeHamiltonian::new(5, &CouplingVector::new(vec![])).unwrap();
        let m = h.dense();
        for i in 0..5 {
            for j in 0..5 {
                let expected = match (i as isize - j as isize).abs() {
                    0 => 2.0,
                    1 => -1.0,
                    _ => 0.0,
                };
                assert_eq!(m[(i, j)], expected);
            }
        }
    }

    #[test]
    fn depth_needs_enough_sites() {
        let err = LatticeHamiltonian::new(4, &CouplingVector::pair(0.1, 0.2)).unwrap_err();
        assert_eq!(err, LatticeError::DepthTooLarge { n: 4, depth: 2 });
        // 2K + 1 = n is the tightest legal case.
        assert!(LatticeHamiltonian::new(5, &CouplingVector::pair(0.1, 0.2)).is_ok());
    }

    #[test]
    fn reversal_symmetry_holds_exactly() {
        for (n, params) in [
            (5, vec![0.7]),
            (7, vec![0.3, 0.4]),
            (11, vec![0.1, -0.2, 0.5]),
        ] {
            let h = LatticeHamiltonian::new(n, &CouplingVector::new(params)).unwrap();
            assert!(h.is_pt_symmetric(0.0));
            let p = parity(n);
            let m = h.dense();
            assert_eq!(&p * &m * &p, m);
        }
    }

    #[test]
    fn adjoint_is_the_transpose() {
        let h = LatticeHamiltonian::new(7, &CouplingVector::pair(0.4, 0.1)).unwrap();
        assert_eq!(h.adjoint().dense(), h.dense().transpose());
    }

    #[test]
    fn offdiagonal_products_depend_only_on_squares() {
        let h = LatticeHamiltonian::new(7, &CouplingVector::pair(0.4, 0.1)).unwrap();
        let prods = h.offdiagonal_products();
        assert!((prods[0] - (1.0 - 0.16)).abs() < 1e-15);
        assert!((prods[1] - (1.0 - 0.01)).abs() < 1e-15);
        assert_eq!(prods[2], 1.0);
        assert!((prods[5] - (1.0 - 0.16)).abs() < 1e-15);
        let flipped = LatticeHamiltonian::new(7, &CouplingVector::pair(-0.4, -0.1)).unwrap();
        assert_eq!(prods, flipped.offdiagonal_products());
    }

    #[test]
    fn exact_offdiagonals_match_float_ones() {
        use crate::exactlin::Rational;
        let (sup, sub) = offdiagonals(
            7,
            &[Rational::new(1, 4), Rational::new(-2, 5)],
        )
        .unwrap();
        let hf = LatticeHamiltonian::new(7, &CouplingVector::pair(0.25, -0.4)).unwrap();
        for i in 0..6 {
            assert_eq!(sup[i].to_float().unwrap(), hf.sup()[i]);
            assert_eq!(sub[i].to_float().unwrap(), hf.sub()[i]);
        }
    }

    proptest! {
        #[test]
        fn random_members_are_reversal_symmetric(
            n in 3usize..16,
            raw in proptest::collection::vec(-2.0f64..2.0, 0..4),
        ) {
            let depth_max = (n - 1) / 2;
            let params: Vec<f64> = raw.into_iter().take(depth_max).collect();
            let h = LatticeHamiltonian::new(n, &CouplingVector::new(params)).unwrap();
            prop_assert!(h.is_pt_symmetric(0.0));
        }
    }
}
