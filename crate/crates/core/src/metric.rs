//! Metric candidates, positivity, and the similarity transform to an
//! explicitly Hermitian form.
//!
//! A symmetric solution `Θ` of the intertwining relation that is also positive
//! definite upgrades the lattice member to a self-adjoint operator in a
//! `Θ`-weighted inner product. This module assembles candidate weights as
//! linear combinations of a pseudometric basis, classifies their positivity,
//! extracts a symmetric square-root factor `Ω` (so `Θ = Ω·Ω`), and checks that
//! `Ω·H·Ω⁻¹` is symmetric and isospectral to `H`. A parity-times-weight
//! product is provided as a diagnostic for involution structure.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::dieudonne::{banded_basis, rank_one_basis, sylvester_kernel, DieudonneError};
use crate::lattice::LatticeHamiltonian;
use crate::spectra::{SpectraError, Spectrum};

/// Errors from metric assembly and factorization.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    /// A combination needs exactly one coefficient per basis member.
    #[error("basis has {basis} member(s) but {coefficients} coefficient(s) were supplied")]
    DimensionMismatch { basis: usize, coefficients: usize },
    /// Square-root factorization needs a positive definite weight.
    #[error("metric candidate is not positive definite (classified {0})")]
    NotPositiveDefinite(Positivity),
    /// The weight matrix cannot be inverted at working precision.
    #[error("weight matrix is singular to working precision")]
    SingularTheta,
    #[error(transparent)]
    Dieudonne(#[from] DieudonneError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// Sign classification of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Positivity {
    PositiveDefinite,
    Indefinite,
    Singular,
}

impl fmt::Display for Positivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Positivity::PositiveDefinite => "positive definite",
            Positivity::Indefinite => "indefinite",
            Positivity::Singular => "singular",
        })
    }
}

/// Where a pseudometric basis came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSource {
    /// Band solutions `k = 1..=n` of the intertwining relation.
    Banded,
    /// Spectral rank-one solutions from left eigenvectors.
    RankOne,
    /// Orthonormal basis of the full symmetric solution space.
    FullKernel,
    /// Caller-supplied matrices.
    Custom,
}

/// A basis of the intertwiner space from which metric candidates are mixed.
#[derive(Debug, Clone)]
pub struct PseudometricBasis {
    pub members: Vec<DMatrix<f64>>,
    pub source: BasisSource,
}

impl PseudometricBasis {
    /// Band solutions `k = 1..=n`.
    pub fn banded(h: &LatticeHamiltonian) -> Result<Self, MetricError> {
        Ok(PseudometricBasis {
            members: banded_basis(h)?,
            source: BasisSource::Banded,
        })
    }

    /// Unit-Frobenius rank-one solutions, one per eigenvalue.
    pub fn rank_one(h: &LatticeHamiltonian) -> Result<Self, MetricError> {
        Ok(PseudometricBasis {
            members: rank_one_basis(h)?,
            source: BasisSource::RankOne,
        })
    }

    /// Orthonormal basis of the full symmetric solution space.
    pub fn full_kernel(h: &LatticeHamiltonian) -> Result<Self, MetricError> {
        Ok(PseudometricBasis {
            members: sylvester_kernel(h)?,
            source: BasisSource::FullKernel,
        })
    }

    /// Caller-supplied basis.
    pub fn custom(members: Vec<DMatrix<f64>>) -> Self {
        PseudometricBasis {
            members,
            source: BasisSource::Custom,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// A candidate weight matrix `Θ = Σ μ_k·B_k` with its classification.
#[derive(Debug, Clone)]
pub struct MetricCandidate {
    pub n: usize,
    pub theta: DMatrix<f64>,
    pub coefficients: Vec<f64>,
    pub source: BasisSource,
    pub positivity: Positivity,
    pub min_eigenvalue: f64,
}

/// Classify a symmetric matrix by its smallest eigenvalue.
///
/// Eigenvalues within `1e−12` of zero (relative to the largest magnitude)
/// count as singular. A nominally positive result is cross-checked with a
/// Cholesky factorization and downgraded to singular if that fails.
pub fn positivity_check(theta: &DMatrix<f64>) -> (Positivity, f64) {
    let eig = theta.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    let scale = eig.eigenvalues.amax().max(1.0);
    let tol = 1e-12 * scale;
    let class = if min.abs() <= tol {
        Positivity::Singular
    } else if min > 0.0 {
        if theta.clone().cholesky().is_some() {
            Positivity::PositiveDefinite
        } else {
            Positivity::Singular
        }
    } else {
        Positivity::Indefinite
    };
    (class, min)
}

/// Mix a weight matrix from the basis: `Θ = Σ μ_k·B_k`, classified by
/// [`positivity_check`]. Solutions of a homogeneous linear relation stay
/// solutions under superposition, so `Θ` inherits the intertwining property.
pub fn assemble_metric(
    basis: &PseudometricBasis,
    coefficients: &[f64],
) -> Result<MetricCandidate, MetricError> {
    if coefficients.len() != basis.members.len() || basis.members.is_empty() {
        return Err(MetricError::DimensionMismatch {
            basis: basis.members.len(),
            coefficients: coefficients.len(),
        });
    }
    let n = basis.members[0].nrows();
    let mut theta = DMatrix::zeros(n, n);
    for (mu, b) in coefficients.iter().zip(&basis.members) {
        theta += b * *mu;
    }
    let (positivity, min_eigenvalue) = positivity_check(&theta);
    Ok(MetricCandidate {
        n,
        theta,
        coefficients: coefficients.to_vec(),
        source: basis.source,
        positivity,
        min_eigenvalue,
    })
}

/// A weighted bilinear form value, flagged with the weight's positivity so
/// callers can tell a true inner product from an indefinite pairing.
#[derive(Debug, Clone, Copy)]
pub struct InnerProduct {
    pub value: f64,
    pub metric_positivity: Positivity,
}

/// The `Θ`-weighted pairing `φᵀ·Θ·ψ`. The value is returned for any weight;
/// the flag records whether the weight actually defines an inner product.
pub fn physical_inner_product(
    metric: &MetricCandidate,
    phi: &DVector<f64>,
    psi: &DVector<f64>,
) -> InnerProduct {
    assert_eq!(phi.len(), metric.n, "vector length must match the metric");
    assert_eq!(psi.len(), metric.n, "vector length must match the metric");
    let value = (phi.transpose() * &metric.theta * psi)[(0, 0)];
    InnerProduct {
        value,
        metric_positivity: metric.positivity,
    }
}

/// Symmetric square-root factorization of a positive definite weight: the
/// factor `Ω` with `Ω·Ω = Θ`, the transformed matrix `Ω·H·Ω⁻¹`, and the
/// residuals certifying that the transform is symmetric and isospectral.
#[derive(Debug, Clone)]
pub struct DysonFactorization {
    pub omega: DMatrix<f64>,
    pub hermitized: DMatrix<f64>,
    pub sym_residual: f64,
    pub isospectrality_residual: f64,
}

/// Factor a positive definite metric as `Θ = Ω·Ω` (principal symmetric square
/// root) and conjugate `H` into the explicitly symmetric `h = Ω·H·Ω⁻¹`.
pub fn dyson_factor(
    metric: &MetricCandidate,
    h: &LatticeHamiltonian,
) -> Result<DysonFactorization, MetricError> {
    if metric.positivity != Positivity::PositiveDefinite {
        return Err(MetricError::NotPositiveDefinite(metric.positivity));
    }
    let eig = metric.theta.clone().symmetric_eigen();
    let mut sqrt_vals = eig.eigenvalues.clone();
    let mut inv_sqrt_vals = eig.eigenvalues.clone();
    for i in 0..sqrt_vals.len() {
        let v = eig.eigenvalues[i];
        if v <= 0.0 {
            return Err(MetricError::NotPositiveDefinite(Positivity::Singular));
        }
        sqrt_vals[i] = v.sqrt();
        inv_sqrt_vals[i] = 1.0 / v.sqrt();
    }
    let q = &eig.eigenvectors;
    let omega = q * DMatrix::from_diagonal(&sqrt_vals) * q.transpose();
    let omega_inv = q * DMatrix::from_diagonal(&inv_sqrt_vals) * q.transpose();
    let hermitized = &omega * h.dense() * &omega_inv;
    let sym_residual = (&hermitized - hermitized.transpose()).amax();

    // Isospectrality: the symmetric part's spectrum must match H's.
    let sym_part = (&hermitized + hermitized.transpose()) * 0.5;
    let mut transformed: Vec<f64> = sym_part.symmetric_eigen().eigenvalues.iter().copied().collect();
    transformed.sort_by(f64::total_cmp);
    let original = Spectrum::compute(h)?;
    let reference = original.real_values();
    let isospectrality_residual = if reference.len() == transformed.len() {
        transformed
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(DysonFactorization {
        omega,
        hermitized,
        sym_residual,
        isospectrality_residual,
    })
}

/// Residual of the similarity identity `Θ⁻¹·Hᵀ·Θ = H`, computed with an LU
/// solve instead of an explicit inverse.
pub fn quasi_hermiticity_residual(
    h: &LatticeHamiltonian,
    theta: &DMatrix<f64>,
) -> Result<f64, MetricError> {
    let hd = h.dense();
    let rhs = hd.transpose() * theta;
    let lu = theta.clone().lu();
    // Partial-pivot LU only fails on exact zero pivots; guard against
    // near-singular weights explicitly.
    let u = lu.u();
    let mut max_pivot = 0.0f64;
    let mut min_pivot = f64::INFINITY;
    for i in 0..u.nrows().min(u.ncols()) {
        let p = u[(i, i)].abs();
        max_pivot = max_pivot.max(p);
        min_pivot = min_pivot.min(p);
    }
    let pivot_floor = 1e-14 * max_pivot.max(f64::MIN_POSITIVE);
    if min_pivot.partial_cmp(&pivot_floor) != Some(std::cmp::Ordering::Greater) {
        return Err(MetricError::SingularTheta);
    }
    let x = lu.solve(&rhs).ok_or(MetricError::SingularTheta)?;
    Ok((x - hd).amax())
}

/// The parity-times-weight product and how far it is from squaring to the
/// identity.
#[derive(Debug, Clone)]
pub struct ChargeCandidate {
    pub c_matrix: DMatrix<f64>,
    pub involution_residual: f64,
}

/// Form `C = P·Θ` and report `‖C² − I‖_max`. Purely diagnostic: nothing
/// asserts the residual is small.
pub fn charge_candidate(theta: &DMatrix<f64>, parity: &DMatrix<f64>) -> ChargeCandidate {
    let c_matrix = parity * theta;
    let n = c_matrix.nrows();
    let involution_residual = (&c_matrix * &c_matrix - DMatrix::<f64>::identity(n, n)).amax();
    ChargeCandidate {
        c_matrix,
        involution_residual,
    }
}
