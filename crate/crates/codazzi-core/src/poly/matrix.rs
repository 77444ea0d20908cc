//! Dense matrices over an exact ring, with two independent determinant routes.
//!
//! [`determinant_fraction_free`] is the production algorithm: Bareiss-style
//! one-step elimination whose intermediate entries stay in the ring (every
//! division is exact by Sylvester's identity), avoiding rational-function
//! swell on polynomial matrices. [`determinant_cofactor`] is the deliberately
//! simple cross-checking oracle: textbook Laplace expansion, exponential but
//! exact, used by tests and by numeric spot checks at small dimensions.
//!
//! The matrix is generic over [`RingElem`] so the same code runs on symbolic
//! [`Poly`] entries and on plain [`Rational`] entries (the numeric
//! specialization route used to cross-check resultants).

use thiserror::Error;

use super::{Poly, Rational};
use num_traits::{One, Zero};

/// Minimal exact-ring interface for matrix entries.
pub trait RingElem: Clone + PartialEq {
    /// Additive identity.
    fn ring_zero() -> Self;
    /// Multiplicative identity.
    fn ring_one() -> Self;
    /// True for the additive identity.
    fn is_ring_zero(&self) -> bool;
    /// Exact sum.
    fn ring_add(&self, other: &Self) -> Self;
    /// Exact difference.
    fn ring_sub(&self, other: &Self) -> Self;
    /// Exact product.
    fn ring_mul(&self, other: &Self) -> Self;
    /// Exact quotient: `Some(q)` iff `self = q·d` exactly in the ring.
    fn ring_exact_div(&self, d: &Self) -> Option<Self>;
}

impl RingElem for Poly {
    fn ring_zero() -> Self {
        Poly::zero()
    }
    fn ring_one() -> Self {
        Poly::one()
    }
    fn is_ring_zero(&self) -> bool {
        self.is_zero()
    }
    fn ring_add(&self, other: &Self) -> Self {
        self + other
    }
    fn ring_sub(&self, other: &Self) -> Self {
        self - other
    }
    fn ring_mul(&self, other: &Self) -> Self {
        self * other
    }
    fn ring_exact_div(&self, d: &Self) -> Option<Self> {
        self.try_exact_div(d)
    }
}

impl RingElem for Rational {
    fn ring_zero() -> Self {
        Rational::zero()
    }
    fn ring_one() -> Self {
        Rational::one()
    }
    fn is_ring_zero(&self) -> bool {
        self.is_zero()
    }
    fn ring_add(&self, other: &Self) -> Self {
        self + other
    }
    fn ring_sub(&self, other: &Self) -> Self {
        self - other
    }
    fn ring_mul(&self, other: &Self) -> Self {
        self * other
    }
    fn ring_exact_div(&self, d: &Self) -> Option<Self> {
        if d.is_zero() {
            None
        } else {
            Some(self / d)
        }
    }
}

/// Errors from matrix operations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatrixError {
    /// Determinant of a non-square matrix was requested.
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<T>,
}

impl<T: RingElem> Matrix<T> {
    /// All-zero matrix of the given shape.
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![T::ring_zero(); rows * cols],
        }
    }

    /// Builds from nested rows; all rows must share one length.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|r| r.len() == ncols),
            "ragged rows: expected uniform length {}",
            ncols
        );
        Self {
            rows: nrows,
            cols: ncols,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    /// Row count.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Column count.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry reference at `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> &T {
        assert!(i < self.rows && j < self.cols, "index out of range");
        &self.entries[i * self.cols + j]
    }

    /// Replaces the entry at `(i, j)`.
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(i < self.rows && j < self.cols, "index out of range");
        self.entries[i * self.cols + j] = value;
    }

    /// Applies a function entrywise (used for numeric specialization).
    pub fn map<U: RingElem>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(f).collect(),
        }
    }
}

/// Exact determinant by fraction-free (Bareiss) elimination with row
/// pivoting. Intermediate entries are minors of the input, so every division
/// by the previous pivot is exact in the ring.
pub fn determinant_fraction_free<T: RingElem>(m: &Matrix<T>) -> Result<T, MatrixError> {
    if m.rows != m.cols {
        return Err(MatrixError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    if n == 0 {
        return Ok(T::ring_one());
    }
    let mut a: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| m.at(i, j).clone()).collect())
        .collect();
    let mut sign_negative = false;
    let mut prev = T::ring_one();
    for k in 0..n - 1 {
        // Pivot search: first row at or below k with a nonzero entry in column k.
        let pivot_row = (k..n).find(|&i| !a[i][k].is_ring_zero());
        let p = match pivot_row {
            Some(p) => p,
            None => return Ok(T::ring_zero()),
        };
        if p != k {
            a.swap(p, k);
            sign_negative = !sign_negative;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = a[k][k]
                    .ring_mul(&a[i][j])
                    .ring_sub(&a[i][k].ring_mul(&a[k][j]));
                a[i][j] = num
                    .ring_exact_div(&prev)
                    .expect("Bareiss division is exact by Sylvester's identity");
            }
            a[i][k] = T::ring_zero();
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    Ok(if sign_negative {
        T::ring_zero().ring_sub(&det)
    } else {
        det
    })
}

/// Exact determinant by Laplace cofactor expansion along the first row,
/// skipping zero entries. Exponential; intended as an independent oracle for
/// small dimensions and as the cross-check for the fraction-free route.
pub fn determinant_cofactor<T: RingElem>(m: &Matrix<T>) -> Result<T, MatrixError> {
    if m.rows != m.cols {
        return Err(MatrixError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    fn go<T: RingElem>(a: &Matrix<T>) -> T {
        let n = a.rows();
        if n == 0 {
            return T::ring_one();
        }
        if n == 1 {
            return a.at(0, 0).clone();
        }
        let mut acc = T::ring_zero();
        for j in 0..n {
            let e = a.at(0, j);
            if e.is_ring_zero() {
                continue;
            }
            let mut minor = Matrix::zero(n - 1, n - 1);
            for i in 1..n {
                let mut cj = 0;
                for c in 0..n {
                    if c == j {
                        continue;
                    }
                    minor.set(i - 1, cj, a.at(i, c).clone());
                    cj += 1;
                }
            }
            let term = e.ring_mul(&go(&minor));
            acc = if j % 2 == 0 {
                acc.ring_add(&term)
            } else {
                acc.ring_sub(&term)
            };
        }
        acc
    }
    Ok(go(m))
}
