//! The 52-row Codazzi table: machine enumeration vs. the printed equations.
//!
//! [`enumerate_codazzi`] expands the residual g((∇_X S)Y − (∇_Y S)X, e_Z)
//! for the 52 index triples in their fixed order T1..T52. The printed forms
//! in [`printed_equation`] are hand-transliterated; [`table_report`] reduces
//! both sides to canonical form under the gradient posture plus one
//! metric-compatibility convention and compares. The two conventions are
//! deliberately kept side by side: [`Compat::Printed`] (sign-blind
//! antisymmetry) reproduces the table verbatim, while [`Compat::Signed`]
//! (first-principles, ε-weighted) flags exactly the rows whose printed form
//! silently used the sign-blind rule across the timelike index.

use serde::Serialize;

use crate::frame::{codazzi_residual, compat_rows, Class, Compat, Field, FrameContext};
use crate::poly::Poly;

use super::{gradient_setup, row, saturate, KnowledgeBase};

/// The fixed enumeration order of the table triples (X, Y, Z).
pub const TABLE_TRIPLES: [(&str, Class, Class, Class); 52] = {
    use Class::*;
    [
        ("T1", E1, E2, E1),
        ("T2", E1, E2, E2),
        ("T3", E1, E2, A),
        ("T4", E1, E2, B),
        ("T5", E1, E2, En),
        ("T6", E1, A, E1),
        ("T7", E1, A, E2),
        ("T8", E1, A, A),
        ("T9", E1, A, At),
        ("T10", E1, A, B),
        ("T11", E1, A, En),
        ("T12", E1, B, E1),
        ("T13", E1, B, E2),
        ("T14", E1, B, A),
        ("T15", E1, B, B),
        ("T16", E1, B, Bt),
        ("T17", E1, B, En),
        ("T18", E1, En, E1),
        ("T19", E1, En, E2),
        ("T20", E1, En, En),
        ("T21", E2, A, E1),
        ("T22", E2, A, E2),
        ("T23", E2, A, A),
        ("T24", E2, A, At),
        ("T25", E2, A, B),
        ("T26", E2, A, En),
        ("T27", E2, B, E1),
        ("T28", E2, B, E2),
        ("T29", E2, B, A),
        ("T30", E2, B, B),
        ("T31", E2, B, Bt),
        ("T32", E2, B, En),
        ("T33", E2, En, E1),
        ("T34", E2, En, E2),
        ("T35", E2, En, En),
        ("T36", A, B, E1),
        ("T37", A, B, E2),
        ("T38", A, B, En),
        ("T39", A, B, Bt),
        ("T40", A, B, At),
        ("T41", A, En, E1),
        ("T42", A, En, E2),
        ("T43", A, En, A),
        ("T44", A, En, B),
        ("T45", A, En, At),
        ("T46", A, En, En),
        ("T47", B, En, E1),
        ("T48", B, En, E2),
        ("T49", B, En, A),
        ("T50", B, En, B),
        ("T51", B, En, Bt),
        ("T52", B, En, En),
    ]
};

/// One enumerated table row: the raw expanded residual for a triple.
#[derive(Debug, Clone)]
pub struct CodazziRow {
    pub id: &'static str,
    pub x: Class,
    pub y: Class,
    pub z: Class,
    pub raw: Poly,
    /// True when the row mentions a second block representative the current
    /// (n, r) does not have, so it asserts nothing about that shape.
    pub vacuous: bool,
}

/// Expands all 52 residuals in table order.
pub fn enumerate_codazzi(ctx: &FrameContext) -> Vec<CodazziRow> {
    TABLE_TRIPLES
        .iter()
        .map(|&(id, x, y, z)| {
            let needs = |c: Class| match c {
                Class::At => !ctx.has_atilde(),
                Class::Bt => !ctx.has_btilde(),
                _ => false,
            };
            CodazziRow {
                id,
                x,
                y,
                z,
                raw: codazzi_residual(ctx, x, y, z),
                vacuous: needs(x) || needs(y) || needs(z),
            }
        })
        .collect()
}

/// The printed form of a table row (left side of "… = 0"), transliterated
/// symbol for symbol. Returns `None` for an unknown id.
pub fn printed_equation(ctx: &FrameContext, id: &str) -> Option<Poly> {
    use Class::*;
    let w = |i: Class, j: Class, k: Class| ctx.conn(i, j, k);
    let d = |i: Class, f: Field| ctx.dfpoly(i, f);
    let lam = ctx.fpoly(Field::Lam);
    let mu = ctx.fpoly(Field::Mu);
    let l3 = ctx.fpoly(Field::Lam3);
    let ln1 = ctx.fpoly(Field::LamN1);
    // Each eigenvalue shifted by −λ_n, i.e. value + nH/2.
    let nh2 = ctx.fpoly(Field::H).scale(&crate::poly::rat(ctx.n, 2));
    let lam_s = &lam + &nh2;
    let l3_s = &l3 + &nh2;
    let ln1_s = &ln1 + &nh2;
    let p = match id {
        "T1" => d(E2, Field::Lam) + d(E1, Field::Mu),
        "T2" => d(E1, Field::Lam) - d(E2, Field::Mu),
        "T3" => (&lam - &l3) * (w(E1, E2, A) - w(E2, E1, A)) - &mu * (w(E2, E2, A) + w(E1, E1, A)),
        "T4" => {
            (&lam - &ln1) * (w(E1, E2, B) - w(E2, E1, B)) - &mu * (w(E2, E2, B) + w(E1, E1, B))
        }
        "T5" => {
            &lam_s * (w(E1, E2, En) - w(E2, E1, En)) - &mu * (w(E2, E2, En) + w(E1, E1, En))
        }
        "T6" => d(A, Field::Lam) - (&l3 - &lam) * w(E1, A, E1) - &mu * w(E1, A, E2),
        "T7" => d(A, Field::Mu) - (&l3 - &lam) * w(E1, A, E2) + &mu * w(E1, A, E1),
        "T8" => d(E1, Field::Lam3) - (&lam - &l3) * w(A, E1, A) - &mu * w(A, E2, A),
        "T9" => (&lam - &l3) * w(A, E1, At) + &mu * w(A, E2, At),
        "T10" => (&l3 - &ln1) * w(E1, A, B) - (&lam - &ln1) * w(A, E1, B) - &mu * w(A, E2, B),
        "T11" => &l3_s * w(E1, A, En) - &lam_s * w(A, E1, En) - &mu * w(A, E2, En),
        "T12" => d(B, Field::Lam) - (&ln1 - &lam) * w(E1, B, E1) - &mu * w(E1, B, E2),
        "T13" => d(B, Field::Mu) - (&ln1 - &lam) * w(E1, B, E2) + &mu * w(E1, B, E1),
        "T14" => (&ln1 - &l3) * w(E1, B, A) - (&lam - &l3) * w(B, E1, A) - &mu * w(B, E2, A),
        "T15" => d(E1, Field::LamN1) - (&lam - &ln1) * w(B, E1, B) - &mu * w(B, E2, B),
        "T16" => (&lam - &ln1) * w(B, E1, Bt) + &mu * w(B, E2, Bt),
        "T17" => &ln1_s * w(E1, B, En) - &lam_s * w(B, E1, En) - &mu * w(B, E2, En),
        "T18" => {
            Poly::zero() - &lam_s * w(E1, En, E1) + &mu * w(E1, En, E2) - d(En, Field::Lam)
        }
        "T19" => {
            Poly::zero() - &lam_s * w(E1, En, E2) - &mu * w(E1, En, E1) - d(En, Field::Mu)
        }
        "T20" => &lam_s * w(En, E1, En) + &mu * w(En, E2, En),
        "T21" => {
            Poly::zero() - d(A, Field::Mu) - (&l3 - &lam) * w(E2, A, E1) - &mu * w(E2, A, E2)
        }
        "T22" => d(A, Field::Lam) - (&l3 - &lam) * w(E2, A, E2) + &mu * w(E2, A, E1),
        "T23" => d(E2, Field::Lam3) - (&lam - &l3) * w(A, E2, A) + &mu * w(A, E1, A),
        "T24" => (&lam - &l3) * w(A, E2, At) - &mu * w(A, E1, At),
        "T25" => (&l3 - &ln1) * w(E2, A, B) - (&lam - &ln1) * w(A, E2, B) + &mu * w(A, E1, B),
        "T26" => &l3_s * w(E2, A, En) - &lam_s * w(A, E2, En) + &mu * w(A, E1, En),
        "T27" => {
            Poly::zero() - d(B, Field::Mu) - (&ln1 - &lam) * w(E2, B, E1) - &mu * w(E2, B, E2)
        }
        "T28" => d(B, Field::Lam) - (&ln1 - &lam) * w(E2, B, E2) + &mu * w(E2, B, E1),
        "T29" => (&ln1 - &l3) * w(E2, B, A) - (&lam - &l3) * w(B, E2, A) + &mu * w(B, E1, A),
        "T30" => d(E2, Field::LamN1) - (&lam - &ln1) * w(B, E2, B) + &mu * w(B, E1, B),
        "T31" => (&lam - &ln1) * w(B, E2, Bt) - &mu * w(B, E1, Bt),
        "T32" => &ln1_s * w(E2, B, En) - &lam_s * w(B, E2, En) + &mu * w(B, E1, En),
        "T33" => {
            Poly::zero() - &lam_s * w(E2, En, E1) + &mu * w(E2, En, E2) + d(En, Field::Mu)
        }
        "T34" => {
            Poly::zero() - &lam_s * w(E2, En, E2) - &mu * w(E2, En, E1) - d(En, Field::Lam)
        }
        "T35" => &lam_s * w(En, E2, En) - &mu * w(En, E1, En),
        "T36" => {
            (&ln1 - &lam) * w(A, B, E1) + &mu * w(A, B, E2)
                - (&l3 - &lam) * w(B, A, E1)
                - &mu * w(B, A, E2)
        }
        "T37" => {
            (&ln1 - &lam) * w(A, B, E2) - &mu * w(A, B, E1) - (&l3 - &lam) * w(B, A, E2)
                + &mu * w(B, A, E1)
        }
        "T38" => &ln1_s * w(A, B, En) - &l3_s * w(B, A, En),
        "T39" => w(B, A, Bt),
        "T40" => w(A, B, At),
        "T41" => {
            Poly::zero() - &lam_s * w(A, En, E1) + &mu * w(A, En, E2)
                - (&l3 - &lam) * w(En, A, E1)
                - &mu * w(En, A, E2)
        }
        "T42" => {
            Poly::zero() - &lam_s * w(A, En, E2) - &mu * w(A, En, E1)
                - (&l3 - &lam) * w(En, A, E2)
                + &mu * w(En, A, E1)
        }
        "T43" => d(En, Field::Lam3) + &l3_s * w(A, En, A),
        "T44" => Poly::zero() - &ln1_s * w(A, En, B) - (&l3 - &ln1) * w(En, A, B),
        "T45" => w(A, En, At),
        "T46" => w(En, A, En),
        "T47" => {
            Poly::zero() - &lam_s * w(B, En, E1) + &mu * w(B, En, E2)
                - (&ln1 - &lam) * w(En, B, E1)
                - &mu * w(En, B, E2)
        }
        "T48" => {
            Poly::zero() - &lam_s * w(B, En, E2) - &mu * w(B, En, E1)
                - (&ln1 - &lam) * w(En, B, E2)
                + &mu * w(En, B, E1)
        }
        "T49" => Poly::zero() - &l3_s * w(B, En, A) - (&ln1 - &l3) * w(En, B, A),
        "T50" => d(En, Field::LamN1) + &ln1_s * w(B, En, B),
        "T51" => w(B, En, Bt),
        "T52" => w(En, B, En),
        _ => return None,
    };
    Some(p)
}

/// Comparison verdict for one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Match,
    Diff,
}

/// Report line for one table row: both sides in canonical form.
#[derive(Debug, Clone, Serialize)]
pub struct TableRowReport {
    pub id: String,
    pub triple: String,
    pub vacuous: bool,
    pub derived: String,
    pub printed: String,
    pub status: RowStatus,
}

/// Full comparison of the enumerated table against the printed one.
#[derive(Debug, Clone, Serialize)]
pub struct TableReport {
    pub n: i64,
    pub r: i64,
    pub convention: String,
    pub rows: Vec<TableRowReport>,
    pub match_count: usize,
    pub diff_count: usize,
}

impl TableReport {
    /// Ids of rows whose canonical forms disagree.
    pub fn diff_ids(&self) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| r.status == RowStatus::Diff)
            .map(|r| r.id.as_str())
            .collect()
    }
}

/// Reduces every enumerated residual and its printed counterpart to
/// canonical form under the gradient posture plus the chosen compatibility
/// convention, and compares them row by row.
pub fn table_report(ctx: &FrameContext, convention: Compat) -> TableReport {
    let kb = compat_closure(ctx, convention);
    let mut rows = Vec::new();
    let mut match_count = 0;
    let mut diff_count = 0;
    for r in enumerate_codazzi(ctx) {
        let derived = kb.canonical_row(&r.raw);
        let printed = kb.canonical_row(
            &printed_equation(ctx, r.id).expect("every enumerated id has a printed form"),
        );
        let status = if derived == printed {
            match_count += 1;
            RowStatus::Match
        } else {
            diff_count += 1;
            RowStatus::Diff
        };
        rows.push(TableRowReport {
            id: r.id.to_string(),
            triple: format!("({}, {}, {})", r.x.short(), r.y.short(), r.z.short()),
            vacuous: r.vacuous,
            derived: ctx.render(&derived),
            printed: ctx.render(&printed),
            status,
        });
    }
    TableReport {
        n: ctx.n,
        r: ctx.r,
        convention: format!("{convention:?}").to_lowercase(),
        rows,
        match_count,
        diff_count,
    }
}

/// The gradient posture with one compatibility convention saturated in, the
/// shared baseline for canonical row comparison.
pub fn compat_closure(ctx: &FrameContext, convention: Compat) -> KnowledgeBase {
    let mut kb = gradient_setup(ctx);
    let rows: Vec<_> = compat_rows(ctx, convention)
        .into_iter()
        .map(|(anchor, poly)| row(anchor, poly))
        .collect();
    saturate(ctx, &mut kb, &rows).expect("compatibility rows are consistent");
    kb
}
