//! Linear view of a polynomial over the unknown symbols.
//!
//! Deduction rows are affine in the unknowns (connection symbols and frame
//! derivatives) with scalar-field polynomials as coefficients — except for
//! occasional genuinely quadratic pieces (products of two unknowns) coming
//! from curvature rows. [`LinExpr`] splits a polynomial into the map
//! `unknown → coefficient` over monomials of unknown-degree exactly one,
//! plus a `constant` part that absorbs everything else.

use std::collections::BTreeMap;

use crate::poly::{Monomial, Poly, Var};

use super::FrameContext;

/// A polynomial partitioned as Σ coefficientᵥ · v + constant, where each
/// `v` is an unknown symbol and each coefficient is a scalar-field
/// polynomial. Monomials of unknown-degree ≠ 1 (including unknown-quadratic
/// products) live in `constant`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinExpr {
    /// Coefficient of each unknown appearing with unknown-degree one.
    pub terms: BTreeMap<Var, Poly>,
    /// Everything else: the unknown-free part plus any higher-degree pieces.
    pub constant: Poly,
}

impl LinExpr {
    /// Partitions `p` by unknown-degree.
    pub fn from_poly(ctx: &FrameContext, p: &Poly) -> Self {
        let mut terms: BTreeMap<Var, Poly> = BTreeMap::new();
        let mut constant = Poly::zero();
        for (mono, coeff) in p.terms() {
            let unknowns: Vec<(Var, u32)> =
                mono.iter().filter(|(v, _)| ctx.is_unknown(*v)).collect();
            match unknowns.as_slice() {
                [(v, 1)] => {
                    let rest: Vec<(Var, u32)> =
                        mono.iter().filter(|(w, _)| !ctx.is_unknown(*w)).collect();
                    let part = Poly::from_terms([(Monomial::from_pairs(&rest), coeff.clone())]);
                    let entry = terms.entry(*v).or_insert_with(Poly::zero);
                    *entry = &*entry + &part;
                }
                _ => {
                    constant = &constant + &Poly::from_terms([(mono.clone(), coeff.clone())]);
                }
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Self { terms, constant }
    }

    /// Reassembles the underlying polynomial.
    pub fn to_poly(&self) -> Poly {
        let mut out = self.constant.clone();
        for (v, coeff) in &self.terms {
            out = &out + &(coeff * &Poly::var(*v));
        }
        out
    }

    /// Coefficient of an unknown (zero if absent).
    pub fn coefficient(&self, v: Var) -> Poly {
        self.terms.get(&v).cloned().unwrap_or_else(Poly::zero)
    }

    /// True when the expression is affine in the unknowns: the constant part
    /// mentions no unknown at all.
    pub fn is_affine(&self, ctx: &FrameContext) -> bool {
        self.constant.variables().iter().all(|v| !ctx.is_unknown(*v))
    }

    /// The unknowns appearing linearly.
    pub fn unknowns(&self) -> Vec<Var> {
        self.terms.keys().copied().collect()
    }

    /// Renders as `coeff * sym + ... + constant` with canonical ordering.
    pub fn render(&self, ctx: &FrameContext) -> String {
        ctx.render(&self.to_poly())
    }
}
