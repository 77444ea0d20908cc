//! Exact symbolic verification engine for the Codazzi/Gauss proof pipeline on
//! Lorentz hypersurfaces whose shape operator has one complex-eigenvalue block.
//!
//! The crate is organized bottom-up:
//! - [`poly`] — sparse exact multivariate polynomials over big rationals,
//!   generic matrices with fraction-free and cofactor determinants, Sylvester
//!   matrices and resultants.
//! - [`frame`] — the orthonormal Lorentz frame calculus: index classes,
//!   signature, shape operator, covariant derivatives, Codazzi and Gauss
//!   residuals, and the frame Laplacian.
//! - [`derive`] — the deduction layer: Codazzi-system enumeration, the
//!   knowledge base of facts with nonvanishing side conditions, saturation,
//!   and replayable derivation traces.
//! - [`cases`] — the case analysis: the Gauss consequence λ = 0, the four
//!   case scripts, eliminant construction, and resultant certification that
//!   the mean curvature is constant.

pub mod cases;
pub mod derive;
pub mod frame;
pub mod poly;

pub use poly::{Poly, Rational, Var, VarTable};
