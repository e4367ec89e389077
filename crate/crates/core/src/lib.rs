//! Spectra, exceptional points, and metric operators for a family of
//! non-Hermitian tridiagonal lattice Hamiltonians with balanced asymmetric
//! couplings.
//!
//! The lattice members are real tridiagonal matrices: a constant diagonal of
//! `2`, couplings `−1 ∓ s_d` on the first `K` bonds at each end (mirrored so
//! that reversing the site order transposes the matrix), and plain Laplacian
//! couplings `−1` in the interior. Such matrices commute with the combined
//! reverse-and-transpose symmetry, which keeps their characteristic
//! polynomials real: eigenvalues are either real or come in conjugate pairs,
//! and the transition points between those regimes are the exceptional points
//! this crate locates.
//!
//! The crate is organized in layers:
//!
//! * [`lattice`] — the matrix family itself.
//! * [`spectra`] — eigenvalues (Sturm bisection on a symmetrized form where
//!   possible, an implicit-shift QR fallback otherwise) and eigenvectors.
//! * [`exactlin`] — arbitrary-precision rational vectors, matrices, and
//!   fraction-free elimination, used as an oracle for the float paths.
//! * [`dieudonne`] — solvers for the intertwining relation `Hᵀ·X = X·H`,
//!   including a banded ansatz with a closed-form catalogue.
//! * [`metric`] — positivity classification, metric operators, and the
//!   similarity transform to an explicitly Hermitian form.
//! * [`exceptional`] — parameter sweeps, reality boundaries, and bisection
//!   refinement of exceptional points.
//! * [`cli`] — the `ptlat` command-line front end.

pub mod cli;
pub mod dieudonne;
pub mod exactlin;
pub mod exceptional;
pub mod lattice;
pub mod metric;
pub mod spectra;

pub use cli::{run, Cli, CliError};
pub use dieudonne::{
    banded_basis, banded_pseudometric, banded_pseudometric_exact, dieudonne_residual,
    formula_elements, formula_matrix, rank_one_basis, support_positions, sylvester_kernel,
    verify_formulas, verify_reduction, DieudonneError, FormulaModel, ReductionReport,
    VerificationReport,
};
pub use exactlin::{ExactError, Rational, RationalMatrix};
pub use exceptional::{
    ep_refine, reality_boundary, sweep, symmetrizability_boundary, AffineMap, EPLocation,
    ExceptionalError, ParameterPath, SweepTable, DEFAULT_BISECTION_TOL,
};
pub use lattice::{parity, CouplingVector, LatticeError, LatticeHamiltonian};
pub use metric::{
    assemble_metric, charge_candidate, dyson_factor, physical_inner_product, positivity_check,
    quasi_hermiticity_residual, ChargeCandidate, DysonFactorization, InnerProduct,
    MetricCandidate, MetricError, Positivity, PseudometricBasis,
};
pub use spectra::{
    eigenpair, real_count, EigenPair, SpectraError, Spectrum, DEFAULT_TOL_REAL,
};
