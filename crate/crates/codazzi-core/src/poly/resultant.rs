//! Sylvester matrices and resultants for the common-factor test.
//!
//! For `f = a₀x^m + … + a_m` and `g = b₀x^n + … + b_n` the Sylvester matrix
//! is the (m+n)×(m+n) matrix whose first `n` rows are the shifted
//! `f`-coefficient rows and whose last `m` rows are the shifted
//! `g`-coefficient rows. Its determinant — the resultant — vanishes exactly
//! when `f` and `g` share a non-constant common factor in `x` over the
//! fraction field of the remaining variables.
//!
//! # Conventions at degenerate degrees
//! - `deg f = m ≥ 1`, `g` a nonzero constant `c`: the layout degenerates to
//!   the m×m diagonal `c`-matrix, so the resultant is `c^m`.
//! - Both constants: the 0×0 matrix, resultant 1.
//! - One input the zero polynomial (the other nonzero): resultant 0 (zero
//!   shares every factor); both zero is rejected as [`ResultantError::BothZero`].

use thiserror::Error;

use super::{determinant_fraction_free, Matrix, Poly, Var};

/// Matrix with polynomial entries (the shape the Sylvester layout produces).
pub type PolyMatrix = Matrix<Poly>;

/// Errors from resultant construction.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResultantError {
    /// Both input polynomials are identically zero.
    #[error("resultant of two zero polynomials is undefined")]
    BothZero,
}

/// Builds the Sylvester matrix of `f` and `g` with respect to `x`.
///
/// Row `i` (for `i < deg g`) carries the coefficients of `f`, leading first,
/// in columns `i..=i+deg f`; row `deg g + j` carries the coefficients of `g`
/// in columns `j..=j+deg g`.
pub fn sylvester_matrix(f: &Poly, g: &Poly, x: Var) -> Result<PolyMatrix, ResultantError> {
    if f.is_zero() && g.is_zero() {
        return Err(ResultantError::BothZero);
    }
    let fc = f.coefficients_in(x);
    let gc = g.coefficients_in(x);
    let m = fc.len() - 1; // deg_x f
    let n = gc.len() - 1; // deg_x g
    let dim = m + n;
    let mut s = Matrix::zero(dim, dim);
    for i in 0..n {
        for (k, a) in fc.iter().enumerate() {
            s.set(i, i + k, a.clone());
        }
    }
    for j in 0..m {
        for (k, b) in gc.iter().enumerate() {
            s.set(n + j, j + k, b.clone());
        }
    }
    Ok(s)
}

/// Resultant of `f` and `g` with respect to `x`: the exact determinant of
/// their Sylvester matrix, computed fraction-free.
///
/// Zero iff `f` and `g` share a non-constant common factor in `x` (over the
/// fraction field of the other variables), with the degenerate conventions
/// described at module level.
pub fn resultant(f: &Poly, g: &Poly, x: Var) -> Result<Poly, ResultantError> {
    if f.is_zero() && g.is_zero() {
        return Err(ResultantError::BothZero);
    }
    if f.is_zero() || g.is_zero() {
        return Ok(Poly::zero());
    }
    let s = sylvester_matrix(f, g, x)?;
    Ok(determinant_fraction_free(&s).expect("Sylvester matrix is square by construction"))
}
