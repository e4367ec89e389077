//! Exact rational arithmetic and fraction-free dense linear algebra.
//!
//! The closed-form band-solution catalogues in [`crate::dieudonne`] are stated
//! over the rationals, so checking them with floating point would only ever
//! prove approximate agreement. This module provides the small exact toolkit
//! the crate needs instead: an arbitrary-precision [`Rational`] newtype (always
//! in reduced form) and a dense [`RationalMatrix`] with an exact nullspace and
//! an exact linear solve, both built on Bareiss fraction-free elimination so
//! all intermediate values stay integers.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::{BigRational, ParseRatioError};
use num::{Integer, One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Errors from exact arithmetic and exact linear algebra.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    /// The coefficient matrix does not determine a unique solution.
    #[error("matrix is singular")]
    SingularMatrix,
    /// A rational value is too large in magnitude for a finite `f64`.
    #[error("rational value overflows f64")]
    Overflow,
}

/// An arbitrary-precision rational number in canonical (reduced) form.
///
/// Thin wrapper around [`num::rational::BigRational`]; the denominator is kept
/// positive and coprime to the numerator by construction, so structural
/// equality is value equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    /// Rational `numer/denom`. Panics if `denom == 0`.
    pub fn new(numer: i64, denom: i64) -> Self {
        Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    /// The integer `v` as a rational.
    pub fn from_integer(v: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(v)))
    }

    /// A big integer as a rational.
    pub fn from_bigint(v: BigInt) -> Self {
        Rational(BigRational::from_integer(v))
    }

    /// Reduced numerator.
    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    /// Reduced denominator (always positive).
    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// Absolute value.
    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    /// Nearest `f64`, or [`ExactError::Overflow`] when the value has no finite
    /// floating-point image.
    pub fn to_float(&self) -> Result<f64, ExactError> {
        match self.0.to_f64() {
            Some(x) if x.is_finite() => Ok(x),
            _ => Err(ExactError::Overflow),
        }
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Rational::from_integer(v)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Rational {
    type Err = ParseRatioError;

    /// Parses `"p/q"` or a bare integer `"p"`, reducing to canonical form.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BigRational::from_str(s).map(Rational)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

impl Zero for Rational {
    fn zero() -> Self {
        Rational(BigRational::zero())
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for Rational {
    fn one() -> Self {
        Rational(BigRational::one())
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

impl_binop!(Add, add);
impl_binop!(Sub, sub);
impl_binop!(Mul, mul);
impl_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Rational {
    fn sub_assign(&mut self, rhs: Rational) {
        self.0 -= rhs.0;
    }
}

impl MulAssign for Rational {
    fn mul_assign(&mut self, rhs: Rational) {
        self.0 *= rhs.0;
    }
}

/// Dense row-major matrix of [`Rational`] entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = RationalMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    /// Matrix built entry by entry from `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        RationalMatrix { rows, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    /// Transposed copy.
    pub fn transpose(&self) -> Self {
        RationalMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    /// Matrix product. Panics on dimension mismatch.
    pub fn mul(&self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "product dimensions {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        RationalMatrix::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = Rational::zero();
            for k in 0..self.cols {
                if !self[(i, k)].is_zero() && !rhs[(k, j)].is_zero() {
                    acc += &self[(i, k)] * &rhs[(k, j)];
                }
            }
            acc
        })
    }

    /// Entrywise difference. Panics on dimension mismatch.
    pub fn sub(&self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        RationalMatrix::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &rhs[(i, j)])
    }

    /// True if every entry is zero.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Rational::is_zero)
    }

    /// Nearest dense `f64` matrix (row-major), or `Overflow` if any entry has
    /// no finite image.
    pub fn to_floats(&self) -> Result<Vec<f64>, ExactError> {
        self.data.iter().map(Rational::to_float).collect()
    }

    /// Rank, by fraction-free elimination.
    pub fn rank(&self) -> usize {
        let (_, pivots) = bareiss_echelon(self.integer_rows(), self.cols);
        pivots.len()
    }

    /// Basis of the right nullspace `{x : A·x = 0}`.
    ///
    /// Each basis vector is canonicalized to a primitive integer vector (the
    /// entries share no common factor) whose first nonzero entry is positive.
    /// An invertible matrix yields an empty basis.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        let (ech, pivots) = bareiss_echelon(self.integer_rows(), self.cols);
        let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
        let mut basis = Vec::new();
        for f in 0..self.cols {
            if pivot_cols.contains(&f) {
                continue;
            }
            let mut x = vec![Rational::zero(); self.cols];
            x[f] = Rational::one();
            for &(r, c) in pivots.iter().rev() {
                let mut acc = Rational::zero();
                for j in (c + 1)..self.cols {
                    if !ech[r][j].is_zero() && !x[j].is_zero() {
                        acc += Rational::from_bigint(ech[r][j].clone()) * &x[j];
                    }
                }
                x[c] = -acc / Rational::from_bigint(ech[r][c].clone());
            }
            basis.push(primitive_integer(x));
        }
        basis
    }

    /// Unique solution of the square system `A·x = b`, or
    /// [`ExactError::SingularMatrix`] when none exists.
    ///
    /// Panics if the matrix is not square or `b` has the wrong length.
    pub fn solve(&self, b: &[Rational]) -> Result<Vec<Rational>, ExactError> {
        assert_eq!(self.rows, self.cols, "solve needs a square matrix");
        assert_eq!(b.len(), self.rows, "right-hand side length mismatch");
        let n = self.rows;
        // Augment with b, clear denominators row by row, eliminate.
        let mut aug = Vec::with_capacity(n);
        for i in 0..n {
            let mut row: Vec<&Rational> = (0..n).map(|j| &self[(i, j)]).collect();
            row.push(&b[i]);
            aug.push(scale_row_to_integers(&row));
        }
        let (ech, pivots) = bareiss_echelon(aug, n + 1);
        if pivots.len() < n || pivots.iter().any(|&(_, c)| c >= n) {
            return Err(ExactError::SingularMatrix);
        }
        let mut x = vec![Rational::zero(); n];
        for &(r, c) in pivots.iter().rev() {
            let mut acc = Rational::from_bigint(ech[r][n].clone());
            for j in (c + 1)..n {
                if !ech[r][j].is_zero() && !x[j].is_zero() {
                    acc -= Rational::from_bigint(ech[r][j].clone()) * &x[j];
                }
            }
            x[c] = acc / Rational::from_bigint(ech[r][c].clone());
        }
        Ok(x)
    }

    /// Rows scaled to integers (each row multiplied by the LCM of its entry
    /// denominators, which does not change rank, kernel, or solution sets).
    fn integer_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|i| {
                let row: Vec<&Rational> = (0..self.cols).map(|j| &self[(i, j)]).collect();
                scale_row_to_integers(&row)
            })
            .collect()
    }
}

impl Index<(usize, usize)> for RationalMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let texts: Vec<String> = self.data.iter().map(|r| r.to_string()).collect();
        let width = texts.iter().map(String::len).max().unwrap_or(1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{:>width$}", texts[i * self.cols + j])?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// A set of exact values keyed by name, rendered in display form. Used by
/// verification reports so callers never see binary float artifacts.
pub fn display_map(values: &BTreeMap<&'static str, Rational>) -> BTreeMap<String, String> {
    values
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// One row multiplied by the LCM of its denominators.
fn scale_row_to_integers(row: &[&Rational]) -> Vec<BigInt> {
    let lcm = row
        .iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    row.iter()
        .map(|r| r.numer() * (&lcm / r.denom()))
        .collect()
}

/// Row echelon form of an integer matrix by Bareiss fraction-free elimination
/// with row pivoting, returning the echelon matrix and the pivot positions.
///
/// Sylvester's determinant identity guarantees each division by the previous
/// pivot is exact, so every intermediate entry remains an integer (a minor of
/// the input); the `debug_assert` checks that invariant.
fn bareiss_echelon(mut m: Vec<Vec<BigInt>>, cols: usize) -> (Vec<Vec<BigInt>>, Vec<(usize, usize)>) {
    let rows = m.len();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut prev = BigInt::one();
    let mut r = 0usize;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        for i in (r + 1)..rows {
            for j in (c + 1)..cols {
                let num = &m[r][c] * &m[i][j] - &m[i][c] * &m[r][j];
                let (q, rem) = num.div_rem(&prev);
                debug_assert!(rem.is_zero(), "fraction-free elimination left a remainder");
                m[i][j] = q;
            }
            m[i][c] = BigInt::zero();
        }
        prev = m[r][c].clone();
        pivots.push((r, c));
        r += 1;
    }
    (m, pivots)
}

/// Scale a rational vector to a primitive integer vector whose first nonzero
/// entry is positive.
fn primitive_integer(v: Vec<Rational>) -> Vec<Rational> {
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let mut ints: Vec<BigInt> = v
        .iter()
        .map(|r| r.numer() * (&lcm / r.denom()))
        .collect();
    let mut gcd = BigInt::zero();
    for x in &ints {
        gcd = gcd.gcd(x);
    }
    if gcd.is_zero() {
        gcd = BigInt::one();
    }
    let flip = ints
        .iter()
        .find(|x| !x.is_zero())
        .map(|x| x.is_negative())
        .unwrap_or(false);
    for x in &mut ints {
        let mut y = &*x / &gcd;
        if flip {
            y = -y;
        }
        *x = y;
    }
    ints.into_iter().map(Rational::from_bigint).collect()
}
