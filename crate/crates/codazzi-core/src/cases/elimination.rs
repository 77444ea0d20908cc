//! The fully non-diagonal branch and the closing resultant certificate.
//!
//! When neither in-block tangent rotation vanishes, the curvature
//! identities close into a linear system on the two normal rotations
//! ω_AA^n, ω_BB^n whose coefficient matrix has rank one; its determinant
//! factors exactly through the sum of squares of the B-rotations, the sum
//! of squares of the eigenvalue pair, and a cubic `f` in the small
//! eigenvalue. Both degenerate side branches (all rotations flat, or the
//! eigenvalue gradients locked) refute themselves against the certified
//! nonzero mean curvature, so `f` and its eigenvalue derivative `g` both
//! vanish on the configuration. The resultant of `f` and `g` eliminates
//! the eigenvalue and leaves a nonzero polynomial in H with coefficients
//! that are rational multiples of powers of the constant scalar μ — hence
//! H is constant.

use std::ops::RangeInclusive;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use super::blocks::Script;
use super::{
    eliminate_var, run_case_a, run_case_b, run_case_c, section4_setup, CaseReport, CasesError,
    Conclusion, Section4,
};
use crate::derive::{printed_equation, row, DerivationTrace, DeriveError, KnowledgeBase};
use crate::frame::{curvature_residual, derived_compat_relation, Class, Field, FrameContext};
use crate::poly::{
    determinant_cofactor, rat, rat_int, resultant, sylvester_matrix, Poly, Rational, Var,
};

/// The real and tilde block classes alive at the current (n, r).
fn live_blocks(ctx: &FrameContext) -> Vec<Class> {
    let mut blocks = vec![Class::A, Class::B];
    if ctx.has_atilde() {
        blocks.push(Class::At);
    }
    if ctx.has_btilde() {
        blocks.push(Class::Bt);
    }
    blocks
}

/// Rewrites a row onto one letter per metric-compatibility pair: the
/// coefficient w[x,x,s] and its directional derivatives are eliminated in
/// favour of w[x,s,x] through the derived compatibility relation, so rows
/// produced by different derivation routes become comparable term by term.
fn orient_row(ctx: &FrameContext, p: &Poly) -> Poly {
    let mut cur = p.clone();
    for x in live_blocks(ctx) {
        for s in [Class::E1, Class::E2, Class::En] {
            let from = ctx.conn_var(x, x, s).expect("distinct indices");
            let to = ctx.conn_var(x, s, x).expect("distinct indices");
            let rel = derived_compat_relation(ctx, x, x, s);
            let cf = rel.coefficients_in(from)[0]
                .as_constant()
                .expect("compatibility rows are monic in each letter");
            let rest = &rel - &Poly::var(from).scale(&cf);
            let ct = rest.coefficients_in(to)[0]
                .as_constant()
                .expect("compatibility rows are monic in each letter");
            let scale = -(ct / cf);
            cur = cur.substitute_var(from, &Poly::var(to).scale(&scale));
            for dir in Class::ALL {
                if let (Some(dfrom), Some(dto)) =
                    (ctx.dconn(dir, x, x, s), ctx.dconn(dir, x, s, x))
                {
                    cur = cur.substitute_var(dfrom, &Poly::var(dto).scale(&scale));
                }
            }
        }
    }
    cur
}

/// Declares a polynomial nonzero after a structural positivity licence
/// that is sound over the reals: every coefficient is positive, every
/// exponent is even (each term is then pointwise nonnegative), and at
/// least one term is a product of scalars already certified nonzero, so
/// the sum is bounded below by a pointwise positive quantity.
fn declare_positive_even_form(
    ctx: &FrameContext,
    kb: &mut KnowledgeBase,
    anchor: &str,
    p: &Poly,
    trace: &mut DerivationTrace,
) -> Result<(), CasesError> {
    let zero = rat_int(0);
    let shaped = !p.is_zero()
        && p.terms()
            .all(|(m, c)| c > &zero && m.iter().all(|(_, e)| e % 2 == 0));
    let witnessed = p.terms().any(|(m, _)| {
        let term = Poly::from_terms([(m.clone(), rat_int(1))]);
        kb.certify(&term).is_some()
    });
    if !(shaped && witnessed) {
        return Err(CasesError::Blocked {
            step: anchor.to_string(),
            detail: format!(
                "positivity licence rejected for {}: needs positive coefficients, \
                 even exponents, and a certified witness term",
                ctx.render(p)
            ),
        });
    }
    kb.declare_nonzero(ctx, anchor, p, trace);
    Ok(())
}

/// Scalar letters of the rotation linear system at fixed (n, r), plus the
/// determinant cubic `f` and its display-form eigenvalue derivative `g`.
struct RotationScalars {
    p: Poly,
    q: Poly,
    rr: Poly,
    t: Poly,
    s: Poly,
    c1: Poly,
    c2: Poly,
    f: Poly,
    g: Poly,
}

fn rotation_scalars(ctx: &FrameContext) -> RotationScalars {
    let (n, r) = (ctx.n, ctx.r);
    let lam3 = ctx.fpoly(Field::Lam3);
    let mu = ctx.fpoly(Field::Mu);
    let h = ctx.fpoly(Field::H);
    let p = mu.scale(&rat_int(2 * (n - r - 1)));
    let q = &h.scale(&rat_int(n * (n - r + 5))) - &lam3.scale(&rat_int(4 * (r - 2)));
    let rr = &h.scale(&rat_int(3 * n)) - &lam3.scale(&rat_int(2 * (r - 2)));
    let t = &lam3.scale(&rat_int(2)) + &h.scale(&rat_int(n));
    let s = &lam3.pow(2) + &mu.pow(2);
    let c1 = &(&lam3 * &rr) + &(&mu * &p);
    let c2 = &(&mu * &rr) - &(&lam3 * &p);
    // 2PQ·s + Q·t·(λ₃P − μR) − 2PR·s − P·t·(λ₃R + μP)
    let f = &(&(&(&(&p * &q) * &s).scale(&rat_int(2))
        + &(&(&q * &t) * &(&(&lam3 * &p) - &(&mu * &rr))))
        - &(&(&p * &rr) * &s).scale(&rat_int(2)))
        - &(&(&p * &t) * &(&(&lam3 * &rr) + &(&mu * &p)));
    // 4Pλ₃(Q−R) − 4P·s·(r−2) + 2(PQλ₃ − QRμ − λ₃PR − P²μ)
    //   + t·(PQ − 2λ₃P(r−2) + 2(r−2)(2R+Q)μ − PR)
    let g = &(&(&(&(&p * &lam3).scale(&rat_int(4)) * &(&q - &rr))
        - &(&p * &s).scale(&rat_int(4 * (r - 2))))
        + &(&(&(&(&p * &q) * &lam3) - &(&(&q * &rr) * &mu))
            - &(&(&(&lam3 * &p) * &rr) + &(&p.pow(2) * &mu)))
            .scale(&rat_int(2)))
        + &(&t
            * &(&(&(&p * &q) - &(&lam3 * &p).scale(&rat_int(2 * (r - 2))))
                + &(&(&(&rr.scale(&rat_int(2)) + &q) * &mu).scale(&rat_int(2 * (r - 2)))
                    - &(&p * &rr))));
    RotationScalars {
        p,
        q,
        rr,
        t,
        s,
        c1,
        c2,
        f,
        g,
    }
}

/// Formal derivative of `p` with respect to the single variable `x`.
fn formal_derivative(p: &Poly, x: Var) -> Poly {
    let d = p.degree_in(x);
    let coeffs = p.coefficients_in(x);
    let mut acc = Poly::zero();
    for (i, c) in coeffs.iter().enumerate() {
        let k = d - i as u32;
        if k > 0 {
            acc = &acc + &(&c.scale(&rat_int(k as i64)) * &Poly::var(x).pow(k - 1));
        }
    }
    acc
}

/// Chained single-variable elimination: resolves each listed letter of
/// `cur` against its degree-one relation, skipping letters already absent.
fn chain_eliminate(
    script: &Script,
    mut cur: Poly,
    rows: &[(&Poly, Var)],
) -> Result<Poly, CasesError> {
    for (rel, v) in rows {
        if cur.degree_in(*v) >= 1 {
            cur = eliminate_var(&cur, rel, *v)
                .ok_or_else(|| script.blocked("elimination needs degree one on both sides"))?;
        }
    }
    Ok(cur)
}

/// With every in-plane rotation of both real blocks flat, the curvature
/// identities on the (block, e2; block, e1) slots pin μ times each block
/// eigenvalue; μ is certified nonzero, so both eigenvalues are installed
/// as zero — and the eigenvalue budget then collapses onto the certified
/// nonzero mean curvature. The degenerate branch refutes itself.
fn refute_rotationless_state(
    ctx: &FrameContext,
    kb: &mut KnowledgeBase,
    trace: &mut DerivationTrace,
    script: &mut Script,
    tag: &str,
) -> Result<(), CasesError> {
    let mu = ctx.fpoly(Field::Mu);
    let branches = [
        (Class::B, Field::LamN1, "large"),
        (Class::A, Field::Lam3, "small"),
    ];
    for (idx, (block, field, size)) in branches.into_iter().enumerate() {
        let res = orient_row(
            ctx,
            &curvature_residual(ctx, block, Class::E2, block, Class::E1, kb)?,
        );
        let display = &mu * &ctx.fpoly(field);
        let id = script.next_id();
        script.check_normalized(
            &format!(
                "{tag}: curvature identity on the flattened ({}, e2; {}, e1) slots pins μ \
                 times the {size} eigenvalue",
                block.short(),
                block.short()
            ),
            &res,
            &display,
        )?;
        let install = kb.install_field_fact(ctx, field, &Poly::zero(), &id, trace);
        match install {
            Ok(()) if idx == 0 => {}
            Ok(()) => {
                return Err(script.blocked(format!(
                    "{tag}: the degenerate branch failed to refute itself"
                )))
            }
            Err(DeriveError::Inconsistent {
                anchor,
                row: bad,
                stripped,
            }) if idx == 1 => {
                if !stripped.iter().any(|a| a == "nonzero:H") {
                    return Err(script.blocked(format!(
                        "{tag}: the collapse did not strip the mean curvature ({stripped:?})"
                    )));
                }
                script.note(
                    &format!(
                        "{tag}: installing both flattened eigenvalues collapses the eigenvalue \
                         budget against the certified mean curvature"
                    ),
                    format!("{bad} = 0 modulo {stripped:?} (from {anchor})"),
                );
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

/// One exactly evaluated coefficient of the resultant, indexed by the
/// power of H it multiplies.
#[derive(Debug, Clone, Serialize)]
pub struct HCoefficient {
    pub h_power: u32,
    pub poly_in_mu: String,
}

/// The closing certificate: the resultant of the determinant cubic and
/// its eigenvalue derivative, exactly expanded over the rationals, with a
/// sample point certifying that its H-leading coefficient is nonzero.
#[derive(Debug, Clone, Serialize)]
pub struct ResultantReport {
    pub n: i64,
    pub r: i64,
    #[serde(rename = "degree_in_H")]
    pub degree_in_h: u32,
    pub coefficients: Vec<HCoefficient>,
    pub certificate_point: String,
    pub certificate_value: String,
    /// The resultant itself, kept exact for downstream checks.
    #[serde(skip)]
    pub resultant: Poly,
    /// Leading H-coefficient, kept exact for downstream checks.
    #[serde(skip)]
    pub leading_coefficient: Poly,
    /// Whether the leading H-coefficient is a rational multiple of a
    /// single power of μ (hence nonzero wherever μ is).
    #[serde(skip)]
    pub leading_is_mu_power: bool,
}

/// Fixed rational sample points (H, μ) for the cross-check determinant;
/// μ is never zero, so the leading coefficients cannot drop.
const CROSS_CHECK_POINTS: [((i64, i64), (i64, i64)); 3] =
    [((7, 3), (2, 5)), ((-5, 2), (3, 7)), ((9, 4), (-11, 6))];

/// Candidate μ-values for the leading-coefficient certificate.
const CERTIFICATE_CANDIDATES: [(i64, i64); 4] = [(2, 5), (3, 7), (-5, 3), (7, 2)];

fn build_resultant_report(
    ctx: &FrameContext,
    script: &mut Script,
    scal: &RotationScalars,
) -> Result<ResultantReport, CasesError> {
    let l3v = ctx.field(Field::Lam3);
    let hv = ctx.field(Field::H);
    let muv = ctx.field(Field::Mu);
    let res = resultant(&scal.f, &scal.g, l3v)
        .map_err(|e| script.blocked(format!("resultant construction failed: {e}")))?;
    if res.is_zero() {
        return Err(CasesError::ZeroResultant { n: ctx.n, r: ctx.r });
    }
    if res.variables().iter().any(|v| *v != hv && *v != muv) {
        return Err(script.blocked("the resultant kept a letter besides H and μ"));
    }
    let degree_in_h = res.degree_in(hv);
    if degree_in_h == 0 {
        return Err(script.blocked("the resultant carries no mean-curvature constraint"));
    }
    let coeffs = res.coefficients_in(hv);
    let leading = coeffs[0].clone();
    let leading_is_mu_power = leading.term_count() == 1
        && leading
            .terms()
            .all(|(m, _)| m.iter().all(|(v, _)| v == muv));
    script.note(
        "the eliminated system leaves a nonzero polynomial constraint on the mean curvature",
        format!(
            "degree {} in H; leading coefficient {}{}",
            degree_in_h,
            ctx.render(&leading),
            if leading_is_mu_power {
                " (a rational multiple of a power of μ: nonzero wherever μ is)"
            } else {
                " (carries further μ-structure)"
            }
        ),
    );

    // Cross-check the exact resultant against numeric cross-check
    // determinants at fixed rational points.
    let mut agreed = 0usize;
    for ((hn, hd), (mn, md)) in CROSS_CHECK_POINTS {
        match cross_check_at(ctx, scal, &res, &rat(hn, hd), &rat(mn, md))? {
            Some(true) => agreed += 1,
            Some(false) => {}
            None => return Err(script.blocked("a sample point dropped the leading coefficient")),
        }
    }
    script.record(
        "the exact resultant agrees with the specialized cross-check determinant",
        format!("{agreed}/3 sample points agree"),
        "3/3 sample points agree".to_string(),
        agreed == CROSS_CHECK_POINTS.len(),
    )?;

    let mut certificate = None;
    for (cn, cd) in CERTIFICATE_CANDIDATES {
        let m0 = rat(cn, cd);
        let value = leading.eval(|_| m0.clone());
        if value != rat_int(0) {
            certificate = Some((m0, value));
            break;
        }
    }
    let (point, value) =
        certificate.ok_or_else(|| script.blocked("no sample certified the leading coefficient"))?;

    Ok(ResultantReport {
        n: ctx.n,
        r: ctx.r,
        degree_in_h,
        coefficients: coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| HCoefficient {
                h_power: degree_in_h - k as u32,
                poly_in_mu: ctx.render(c),
            })
            .collect(),
        certificate_point: format!("mu = {point}"),
        certificate_value: value.to_string(),
        resultant: res,
        leading_coefficient: leading,
        leading_is_mu_power,
    })
}

/// Specializes the eliminant pair at (H, μ) = (h0, m0), takes the numeric
/// Sylvester determinant, and compares it with the exact resultant
/// evaluated at the same point. `Ok(None)` when the specialization drops a
/// leading degree, so no conclusion can be drawn there.
fn cross_check_at(
    ctx: &FrameContext,
    scal: &RotationScalars,
    res: &Poly,
    h0: &Rational,
    m0: &Rational,
) -> Result<Option<bool>, CasesError> {
    let blocked = |detail: String| CasesError::Blocked {
        step: "resultant/cross-check".to_string(),
        detail,
    };
    let l3v = ctx.field(Field::Lam3);
    let hv = ctx.field(Field::H);
    let muv = ctx.field(Field::Mu);
    let specialize = |p: &Poly| {
        p.substitute_var(hv, &Poly::constant(h0.clone()))
            .substitute_var(muv, &Poly::constant(m0.clone()))
    };
    let fs = specialize(&scal.f);
    let gs = specialize(&scal.g);
    if fs.degree_in(l3v) != scal.f.degree_in(l3v) || gs.degree_in(l3v) != scal.g.degree_in(l3v) {
        return Ok(None);
    }
    let m = sylvester_matrix(&fs, &gs, l3v)
        .map_err(|e| blocked(format!("sample matrix failed: {e}")))?
        .map(|p| p.as_constant().expect("specialized entries are rational"));
    let det = determinant_cofactor(&m)
        .map_err(|e| blocked(format!("sample determinant failed: {e}")))?;
    let res_at = res.eval(|v| {
        if v == hv {
            h0.clone()
        } else {
            m0.clone()
        }
    });
    Ok(Some(res_at == det))
}

/// Replays the resultant cross-check at `trials` pseudo-random rational
/// (H, μ) sample points with μ ≠ 0, drawn deterministically from `seed`:
/// each point specializes the eliminant pair, takes the numeric Sylvester
/// determinant, and compares it with the exact resultant evaluated there.
/// Returns how many points agreed; a sound resultant agrees at every one.
pub fn spot_check_resultant(
    ctx: &FrameContext,
    report: &ResultantReport,
    seed: u64,
    trials: usize,
) -> Result<usize, CasesError> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let blocked = |detail: String| CasesError::Blocked {
        step: "resultant/spot-check".to_string(),
        detail,
    };
    if report.n != ctx.n || report.r != ctx.r {
        return Err(blocked(format!(
            "report is shaped for n = {}, r = {} but the context is n = {}, r = {}",
            report.n, report.r, ctx.n, ctx.r
        )));
    }
    let scal = rotation_scalars(ctx);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |nonzero: bool| loop {
        let num = rng.gen_range(-12i64..=12);
        if nonzero && num == 0 {
            continue;
        }
        return rat(num, rng.gen_range(1i64..=12));
    };
    let mut agreed = 0usize;
    for _ in 0..trials {
        let h0 = draw(false);
        let m0 = draw(true);
        match cross_check_at(ctx, &scal, &report.resultant, &h0, &m0)? {
            Some(true) => agreed += 1,
            Some(false) => {}
            None => {
                return Err(blocked(format!(
                    "the sample point (H, mu) = ({h0}, {m0}) dropped a leading degree"
                )))
            }
        }
    }
    Ok(agreed)
}

/// Installs the non-diagonal hypotheses (the frame rotation w[1,2,·] has
/// no component along any live block) and returns the extended state with
/// the rendered hypothesis rows.
fn nondiagonal_state(
    ctx: &FrameContext,
    s4: &Section4,
) -> Result<(KnowledgeBase, DerivationTrace, Vec<String>), CasesError> {
    let mut kb = s4.kb.clone();
    let mut trace = s4.trace.clone();
    let mut hypotheses = Vec::new();
    for k in live_blocks(ctx) {
        let p = ctx.conn(Class::E1, Class::E2, k);
        hypotheses.push(ctx.render(&p));
        kb.process_row(ctx, row("case-d/hyp-rotation", p), &mut trace)?;
    }
    Ok((kb, trace, hypotheses))
}

/// Neither in-block tangent rotation vanishes: the rotation kinematics
/// close into a rank-one linear system, both degenerate side branches
/// refute themselves, and the resultant of the surviving cubic against
/// its eigenvalue derivative certifies that H obeys a nonzero polynomial
/// with constant coefficients.
pub fn run_case_d(
    ctx: &FrameContext,
    s4: &Section4,
) -> Result<(CaseReport, ResultantReport), CasesError> {
    let (kb, trace, hypotheses) = nondiagonal_state(ctx, s4)?;
    let mut script = Script::new(ctx, 'd');
    let (n, r) = (ctx.n, ctx.r);

    // Every in-plane frame rotation is flat in the hypothesis closure.
    let mut flat = Vec::new();
    for x in live_blocks(ctx) {
        for (i, j) in [
            (Class::E1, Class::E1),
            (Class::E2, Class::E1),
            (Class::E1, Class::E2),
            (Class::E2, Class::E2),
        ] {
            let v = ctx.conn_var(i, j, x).expect("distinct indices");
            if !kb.is_zero_fact(v) {
                return Err(script.blocked(format!(
                    "the in-plane rotation {} survived the hypotheses",
                    ctx.render(&Poly::var(v))
                )));
            }
            flat.push(ctx.render(&Poly::var(v)));
        }
    }
    script.note(
        "the rotation hypotheses flatten every in-plane frame rotation",
        format!("{} = 0", flat.join(" = ")),
    );

    // Display letters: one per block rotation, on the oriented side.
    let om = |x: Class, s: Class| -> Poly {
        Poly::var(ctx.conn_var(x, s, x).expect("distinct indices")).scale(&rat_int(-1))
    };
    let om_a1 = om(Class::A, Class::E1);
    let om_a2 = om(Class::A, Class::E2);
    let om_an = om(Class::A, Class::En);
    let om_b1 = om(Class::B, Class::E1);
    let om_b2 = om(Class::B, Class::E2);
    let om_bn = om(Class::B, Class::En);
    let first_var = |p: &Poly| p.variables()[0];
    let (y1v, y2v) = (first_var(&om_a1), first_var(&om_a2));
    let (x1v, x2v) = (first_var(&om_b1), first_var(&om_b2));
    let (uv, vv) = (first_var(&om_an), first_var(&om_bn));

    // Curvature identities on the (block, tangent; block, normal) slots:
    // each normal rotation differentiates onto itself times the matching
    // tangent rotation.
    let mut rotation_rows = Vec::new();
    for (tangent, block, om_n, om_t) in [
        (Class::E1, Class::A, &om_an, &om_a1),
        (Class::E1, Class::B, &om_bn, &om_b1),
        (Class::E2, Class::A, &om_an, &om_a2),
        (Class::E2, Class::B, &om_bn, &om_b2),
    ] {
        let res = orient_row(
            ctx,
            &curvature_residual(ctx, block, tangent, block, Class::En, &kb)?,
        );
        let display = &ctx.derive(tangent, om_n)? - &(om_n * om_t);
        script.check_normalized(
            &format!(
                "curvature identity on the ({}, {}; {}, e_n) slots rotates the block's \
                 normal coefficient",
                block.short(),
                tangent.short(),
                block.short()
            ),
            &res,
            &display,
        )?;
        rotation_rows.push(res);
    }

    // Tangent gradient rows for both eigenvalues, value-reduced to the
    // current state.
    let tangent_row = |id: &str| -> Result<Poly, CasesError> {
        printed_equation(ctx, id)
            .map(|p| kb.value_reduce(&p))
            .ok_or_else(|| script.blocked(format!("missing tangent gradient row {id}")))
    };
    let t8 = tangent_row("T8")?;
    let t15 = tangent_row("T15")?;
    let t23 = tangent_row("T23")?;
    let t30 = tangent_row("T30")?;
    let grads = |dir: Class| (ctx.dfield(dir, Field::Lam3), ctx.dfield(dir, Field::LamN1));
    let (d1l3, d1ln1) = grads(Class::E1);
    let (d2l3, d2ln1) = grads(Class::E2);
    let lam_n1 = ctx.field(Field::LamN1);
    let eliminate_large = |script: &Script, p: Poly| -> Result<Poly, CasesError> {
        if p.degree_in(lam_n1) == 1 {
            eliminate_var(&p, &s4.trace_row, lam_n1)
                .ok_or_else(|| script.blocked("the eigenvalue budget lost its pivot"))
        } else {
            Ok(p)
        }
    };

    let scal = rotation_scalars(ctx);
    let lam3 = ctx.fpoly(Field::Lam3);
    let mu = ctx.fpoly(Field::Mu);
    let h = ctx.fpoly(Field::H);

    // Budget derivatives along e1 and e2, resolved through the tangent
    // gradient rows and the budget itself.
    let budget_e1 = chain_eliminate(
        &script,
        kb.value_reduce(&ctx.derive(Class::E1, &s4.trace_row)?),
        &[(&t8, d1l3), (&t15, d1ln1)],
    )?;
    let budget_e1 = eliminate_large(&script, budget_e1)?;
    let disp19 = &(&(&lam3 * &om_a1) - &(&mu * &om_a2)).scale(&rat_int(2 * (r - 2)))
        + &(&(&scal.rr * &om_b1) - &(&scal.p * &om_b2));
    script.check_normalized(
        "derivative of the eigenvalue budget along e1, resolved through the tangent gradients",
        &budget_e1,
        &disp19,
    )?;

    let budget_e2 = chain_eliminate(
        &script,
        kb.value_reduce(&ctx.derive(Class::E2, &s4.trace_row)?),
        &[(&t23, d2l3), (&t30, d2ln1)],
    )?;
    let budget_e2 = eliminate_large(&script, budget_e2)?;
    let disp20 = &(&(&lam3 * &om_a2) + &(&mu * &om_a1)).scale(&rat_int(2 * (r - 2)))
        + &(&(&scal.rr * &om_b2) + &(&scal.p * &om_b1));
    script.check_normalized(
        "derivative of the eigenvalue budget along e2, resolved through the tangent gradients",
        &budget_e2,
        &disp20,
    )?;

    // Rotating the two budget derivatives by (λ₃, μ) isolates each
    // A-rotation behind the eigenvalue sum of squares.
    let comb1 = &(&lam3 * &disp19) + &(&mu * &disp20);
    let disp21 = &(&om_a1 * &scal.s).scale(&rat_int(2 * (r - 2)))
        + &(&(&scal.c1 * &om_b1) + &(&scal.c2 * &om_b2));
    script.check_exact(
        "rotate the budget derivatives to isolate the first A-rotation",
        &comb1,
        &disp21,
    )?;
    let comb2 = &(&lam3 * &disp20) - &(&mu * &disp19);
    let disp22 = &(&om_a2 * &scal.s).scale(&rat_int(2 * (r - 2)))
        + &(&(&scal.c1 * &om_b2) - &(&scal.c2 * &om_b1));
    script.check_exact(
        "rotate the budget derivatives to isolate the second A-rotation",
        &comb2,
        &disp22,
    )?;

    // Normal-balance derivatives along e1 and e2, resolved through the
    // rotation rows and the tangent gradients.
    let bal = orient_row(ctx, &s4.balance_row);
    let da = |dir: Class, x: Class| ctx.dconn(dir, x, Class::En, x).expect("distinct indices");
    let balance_e1 = eliminate_large(
        &script,
        chain_eliminate(
            &script,
            kb.value_reduce(&ctx.derive(Class::E1, &bal)?),
            &[
                (&rotation_rows[0], da(Class::E1, Class::A)),
                (&rotation_rows[1], da(Class::E1, Class::B)),
                (&t8, d1l3),
                (&t15, d1ln1),
            ],
        )?,
    )?;
    let diff_uv = &om_an - &om_bn;
    let cb = &h.scale(&rat_int(n * (n - r + 2))) - &lam3.scale(&rat_int(2 * (r - 2)));
    let disp23 = &(&(&(&(&lam3 * &om_a1) - &(&mu * &om_a2)).scale(&rat_int(2 * (r - 2)))
        * &diff_uv)
        + &(&(&cb * &om_bn) * &om_b1))
        + &(&(&scal.t.scale(&rat_int(r - 2)) * &om_an) * &om_a1);
    script.check_normalized(
        "derivative of the normal balance along e1, resolved through the rotation rows",
        &balance_e1,
        &disp23,
    )?;

    let balance_e2 = eliminate_large(
        &script,
        chain_eliminate(
            &script,
            kb.value_reduce(&ctx.derive(Class::E2, &bal)?),
            &[
                (&rotation_rows[2], da(Class::E2, Class::A)),
                (&rotation_rows[3], da(Class::E2, Class::B)),
                (&t23, d2l3),
                (&t30, d2ln1),
            ],
        )?,
    )?;
    let disp24 = &(&(&(&(&lam3 * &om_a2) + &(&mu * &om_a1)).scale(&rat_int(2 * (r - 2)))
        * &diff_uv)
        + &(&(&cb * &om_bn) * &om_b2))
        + &(&(&scal.t.scale(&rat_int(r - 2)) * &om_an) * &om_a2);
    script.check_normalized(
        "derivative of the normal balance along e2, resolved through the rotation rows",
        &balance_e2,
        &disp24,
    )?;

    // Eliminating the A-rotations leaves each balance derivative linear in
    // the two normal rotations; one certified μ factor strips off.
    let mu_only = |stripped: &[String]| stripped.iter().all(|a| a == "nonzero:mu");
    let elim25 = eliminate_var(
        &eliminate_var(&disp23, &disp19, y2v)
            .ok_or_else(|| script.blocked("A-rotation elimination lost degree one"))?,
        &disp21,
        y1v,
    )
    .ok_or_else(|| script.blocked("A-rotation elimination lost degree one"))?;
    let (elim25, strip25) = kb.normalize_row(&elim25);
    let disp25 = &(&om_an
        * &(&(&(&(&scal.p * &om_b2) - &(&scal.rr * &om_b1)).scale(&rat_int(2)) * &scal.s)
            - &(&scal.t * &(&(&scal.c1 * &om_b1) + &(&scal.c2 * &om_b2)))))
        + &(&om_bn * &(&(&(&scal.q * &om_b1) - &(&scal.p * &om_b2)).scale(&rat_int(2)) * &scal.s));
    script.record(
        "eliminate both A-rotations from the e1 balance derivative",
        ctx.render(&elim25),
        ctx.render(&disp25),
        elim25.normalized() == disp25.normalized() && mu_only(&strip25),
    )?;

    let elim26 = eliminate_var(
        &eliminate_var(&disp24, &disp20, y1v)
            .ok_or_else(|| script.blocked("A-rotation elimination lost degree one"))?,
        &disp22,
        y2v,
    )
    .ok_or_else(|| script.blocked("A-rotation elimination lost degree one"))?;
    let (elim26, strip26) = kb.normalize_row(&elim26);
    let disp26 = &(&om_an
        * &(&(&(&(&scal.p * &om_b1) + &(&scal.rr * &om_b2)).scale(&rat_int(-2)) * &scal.s)
            - &(&scal.t * &(&(&scal.c1 * &om_b2) - &(&scal.c2 * &om_b1)))))
        + &(&om_bn * &(&(&(&scal.q * &om_b2) + &(&scal.p * &om_b1)).scale(&rat_int(2)) * &scal.s));
    script.record(
        "eliminate both A-rotations from the e2 balance derivative",
        ctx.render(&elim26),
        ctx.render(&disp26),
        elim26.normalized() == disp26.normalized() && mu_only(&strip26),
    )?;

    // The two rows are linear in the normal rotations; their determinant
    // factors exactly through the B-rotation sum of squares, the
    // eigenvalue sum of squares, and the cubic.
    let lead = |p: &Poly, v: Var| p.coefficients_in(v)[0].clone();
    let det = &(&lead(&disp25, uv) * &lead(&disp26, vv)) - &(&lead(&disp26, uv) * &lead(&disp25, vv));
    let sum_sq = &Poly::var(x1v).pow(2) + &Poly::var(x2v).pow(2);
    let f_det = det
        .try_exact_div(&sum_sq)
        .and_then(|q| q.try_exact_div(&scal.s.scale(&rat_int(2))))
        .ok_or_else(|| script.blocked("the rotation determinant did not factor"))?;
    script.check_exact(
        "the normal-rotation determinant factors through the sums of squares and the cubic",
        &f_det,
        &scal.f,
    )?;

    // Degenerate side branch: if both B-rotations were flat, the isolating
    // rows flatten the A-rotations too, and the state refutes itself.
    {
        let mut kb2 = kb.clone();
        let mut trace2 = trace.clone();
        for v in [x1v, x2v] {
            kb2.process_row(
                ctx,
                row("case-d/flat-rotations/hyp", Poly::var(v)),
                &mut trace2,
            )?;
        }
        declare_positive_even_form(
            ctx,
            &mut kb2,
            "case-d/flat-rotations/sum-of-squares",
            &scal.s,
            &mut trace2,
        )?;
        for disp in [&disp21, &disp22] {
            kb2.process_row(
                ctx,
                row("case-d/flat-rotations/isolated", kb2.value_reduce(disp)),
                &mut trace2,
            )?;
        }
        if !(kb2.is_zero_fact(y1v) && kb2.is_zero_fact(y2v)) {
            return Err(script.blocked("the flat-rotation branch kept an A-rotation alive"));
        }
        script.note(
            "flat-rotations: assuming both B-rotations vanish flattens both A-rotations",
            format!(
                "{} = {} = {} = {} = 0",
                ctx.render(&om_b1),
                ctx.render(&om_b2),
                ctx.render(&om_a1),
                ctx.render(&om_a2)
            ),
        );
        refute_rotationless_state(ctx, &mut kb2, &mut trace2, &mut script, "flat-rotations")?;
    }
    // The B-rotation sum of squares is therefore pointwise nonzero, and
    // the determinant identity forces the cubic to vanish.
    let cubic_degree = scal.f.degree_in(ctx.field(Field::Lam3));
    script.record(
        "the cubic constraint on the small eigenvalue survives with full degree",
        format!("degree {cubic_degree} in the small eigenvalue"),
        "degree 3 in the small eigenvalue".to_string(),
        cubic_degree == 3,
    )?;

    // μ is flat in every direction, so it is a constant scalar and may sit
    // inside the resultant's coefficients.
    let mut mu_dirs = vec![Class::E1, Class::E2, Class::En];
    mu_dirs.extend(live_blocks(ctx));
    for dir in &mu_dirs {
        if !kb.is_zero_fact(ctx.dfield(*dir, Field::Mu)) {
            return Err(script.blocked(format!(
                "μ kept a derivative along {}",
                dir.short()
            )));
        }
    }
    script.note(
        "every directional derivative of μ is flat: μ is a constant scalar",
        mu_dirs
            .iter()
            .map(|d| format!("d[{}](mu) = 0", d.short()))
            .collect::<Vec<_>>()
            .join(", "),
    );

    // Differentiating the cubic along e1 and e2 leaves exactly the display
    // factor times the eigenvalue gradient; the factor is the formal
    // derivative of the cubic.
    let l3v = ctx.field(Field::Lam3);
    for (dir, grad) in [(Class::E1, d1l3), (Class::E2, d2l3)] {
        let df = ctx.derive(dir, &scal.f)?;
        let coeff = df.coefficients_in(grad)[0].clone();
        let rest = &df - &(&coeff * &Poly::var(grad));
        if !kb.value_reduce(&rest).is_zero() {
            return Err(script.blocked(format!(
                "the cubic's {} derivative kept terms besides the eigenvalue gradient",
                dir.short()
            )));
        }
        script.check_exact(
            &format!(
                "derivative of the cubic along {} factors through the eigenvalue gradient",
                dir.short()
            ),
            &coeff,
            &scal.g,
        )?;
    }
    script.check_exact(
        "the gradient factor is the formal derivative of the cubic",
        &formal_derivative(&scal.f, l3v),
        &scal.g,
    )?;

    // Degenerate side branch: if the gradient factor were nonzero, both
    // eigenvalue gradients would be flat, every rotation would follow, and
    // the same refutation applies — so the factor vanishes too.
    {
        let mut kb3 = kb.clone();
        let mut trace3 = trace.clone();
        let lamn1 = ctx.fpoly(Field::LamN1);
        let s_b = &lamn1.pow(2) + &mu.pow(2);
        declare_positive_even_form(
            ctx,
            &mut kb3,
            "case-d/locked-gradients/sum-of-squares-small",
            &scal.s,
            &mut trace3,
        )?;
        declare_positive_even_form(
            ctx,
            &mut kb3,
            "case-d/locked-gradients/sum-of-squares-large",
            &s_b,
            &mut trace3,
        )?;
        for v in [d1l3, d2l3] {
            kb3.process_row(
                ctx,
                row("case-d/locked-gradients/hyp", Poly::var(v)),
                &mut trace3,
            )?;
        }
        for dir in [Class::E1, Class::E2] {
            kb3.process_row(
                ctx,
                row(
                    "case-d/locked-gradients/budget",
                    kb3.value_reduce(&ctx.derive(dir, &s4.trace_row)?),
                ),
                &mut trace3,
            )?;
        }
        if !(kb3.is_zero_fact(d1ln1) && kb3.is_zero_fact(d2ln1)) {
            return Err(script.blocked("the budget kept a large-eigenvalue gradient alive"));
        }
        let t8k = kb3.value_reduce(&t8);
        let t23k = kb3.value_reduce(&t23);
        let t15k = kb3.value_reduce(&t15);
        let t30k = kb3.value_reduce(&t30);
        let combos = [
            &(&lam3 * &t8k) + &(&mu * &t23k),
            &(&mu * &t8k) - &(&lam3 * &t23k),
            &(&lamn1 * &t15k) + &(&mu * &t30k),
            &(&mu * &t15k) - &(&lamn1 * &t30k),
        ];
        for combo in combos {
            kb3.process_row(ctx, row("case-d/locked-gradients/rotation", combo), &mut trace3)?;
        }
        for v in [y1v, y2v, x1v, x2v] {
            if !kb3.is_zero_fact(v) {
                return Err(script.blocked("a rotation survived the locked-gradient branch"));
            }
        }
        script.note(
            "locked-gradients: flat eigenvalue gradients flatten every block rotation",
            format!(
                "{} = {} = {} = {} = 0",
                ctx.render(&om_a1),
                ctx.render(&om_a2),
                ctx.render(&om_b1),
                ctx.render(&om_b2)
            ),
        );
        refute_rotationless_state(ctx, &mut kb3, &mut trace3, &mut script, "locked-gradients")?;
    }

    // Both leading eigenvalue coefficients live in μ alone, so the
    // eliminated pair satisfies the nondegeneracy the resultant needs.
    let muv = ctx.field(Field::Mu);
    let pure_mu = |p: &Poly| {
        !p.is_zero() && p.variables().iter().all(|v| *v == muv)
    };
    let lead_f = scal.f.coefficients_in(l3v)[0].clone();
    let lead_g = scal.g.coefficients_in(l3v)[0].clone();
    script.record(
        "both leading eigenvalue coefficients avoid H, so neither drops",
        format!("{} ; {}", ctx.render(&lead_f), ctx.render(&lead_g)),
        "polynomials in μ alone".to_string(),
        pure_mu(&lead_f) && pure_mu(&lead_g),
    )?;

    let report = build_resultant_report(ctx, &mut script, &scal)?;
    let resultant_degree = report.degree_in_h;
    let case_report = CaseReport {
        case: 'D',
        n: ctx.n,
        r: ctx.r,
        hypotheses,
        steps: script.steps,
        conclusion: Conclusion::ConstantMeanCurvature {
            resultant_degree: resultant_degree as usize,
        },
        trace,
    };
    Ok((case_report, report))
}

/// One fully certified grid point.
#[derive(Debug, Clone, Serialize)]
pub struct CertifyEntry {
    pub n: i64,
    pub r: i64,
    /// Scalar each contradiction branch collapses onto.
    pub case_a: String,
    pub case_b: String,
    pub case_c: String,
    /// Degree in H of the closing resultant.
    pub resultant_degree: u32,
    /// Vacuity and structure notes for this grid point.
    pub notes: Vec<String>,
}

/// Outcome of a grid sweep: per-point entries and any failures.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CertifySummary {
    pub entries: Vec<CertifyEntry>,
    pub failures: Vec<String>,
}

impl CertifySummary {
    /// True when every attempted grid point certified cleanly.
    pub fn all_certified(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Everything one grid point contributes to the summary.
#[derive(Default)]
struct PointOutcome {
    entry: Option<CertifyEntry>,
    failures: Vec<String>,
}

fn certify_shape(ctx: &FrameContext, summary: &mut PointOutcome) {
    let (n, r) = (ctx.n, ctx.r);
    let fail = |summary: &mut PointOutcome, what: &str, detail: String| {
        summary.failures.push(format!("({n}, {r}) {what}: {detail}"));
    };

    let mut notes = Vec::new();
    if !ctx.has_atilde() {
        notes.push("the repeated small-eigenvalue class is empty".to_string());
    }
    if !ctx.has_btilde() {
        notes.push("the repeated large-eigenvalue class is empty".to_string());
    }

    // The survivor branches end on eliminant coefficients (2m+3)n²/m for
    // the block multiplicity m; both are positive on every admissible
    // grid point, which keeps those contradictions honest.
    for m in [r - 2, n - r - 1] {
        let coeff = rat((2 * m + 3) * n * n, m);
        if coeff <= rat_int(0) {
            fail(
                summary,
                "eliminant positivity",
                format!("(2·{m}+3)·{n}²/{m} = {coeff} is not positive"),
            );
            return;
        }
    }

    let s4 = match section4_setup(ctx) {
        Ok(s4) => s4,
        Err(e) => {
            fail(summary, "setup", e.to_string());
            return;
        }
    };
    let violated = |summary: &mut PointOutcome,
                    case: char,
                        expect: &str,
                        rep: Result<CaseReport, CasesError>|
     -> Option<String> {
        match rep {
            Ok(rep) => match rep.conclusion.violated() {
                Some(sym) if sym == expect => Some(sym.to_string()),
                other => {
                    fail(
                        summary,
                        &format!("case {case}"),
                        format!("collapsed onto {other:?} instead of {expect}"),
                    );
                    None
                }
            },
            Err(e) => {
                fail(summary, &format!("case {case}"), e.to_string());
                None
            }
        }
    };
    let Some(case_a) = violated(summary, 'A', "e_n(H)", run_case_a(ctx, &s4)) else {
        return;
    };
    let Some(case_b) = violated(summary, 'B', "H", run_case_b(ctx, &s4)) else {
        return;
    };
    let Some(case_c) = violated(summary, 'C', "H", run_case_c(ctx, &s4)) else {
        return;
    };
    let (rep_d, resultant) = match run_case_d(ctx, &s4) {
        Ok(pair) => pair,
        Err(e) => {
            fail(summary, "case D", e.to_string());
            return;
        }
    };
    let diffs = rep_d.diff_ids();
    if !diffs.is_empty() {
        fail(summary, "case D", format!("diffs at {diffs:?}"));
        return;
    }
    if !resultant.leading_is_mu_power {
        notes.push(format!(
            "the resultant's leading H-coefficient carries μ-structure: {}",
            resultant
                .coefficients
                .first()
                .map(|c| c.poly_in_mu.as_str())
                .unwrap_or("")
        ));
    }
    summary.entry = Some(CertifyEntry {
        n,
        r,
        case_a,
        case_b,
        case_c,
        resultant_degree: resultant.degree_in_h,
        notes,
    });
}

/// Sweeps the (n, r) grid: on every admissible point the three
/// contradiction branches must collapse onto their certified scalars and
/// the non-diagonal branch must close with a nonzero resultant. Points
/// outside the admissible frame bounds are skipped; every other failure
/// is listed.
pub fn certify_theorem(
    n_range: RangeInclusive<i64>,
    r_range: RangeInclusive<i64>,
) -> CertifySummary {
    let mut points = Vec::new();
    for n in n_range {
        for r in r_range.clone() {
            if FrameContext::new(n, r).is_ok() {
                points.push((n, r));
            }
        }
    }

    // Grid points are independent pure computations; run them on worker
    // threads and reassemble the outcomes in grid order so the summary is
    // deterministic regardless of scheduling.
    let slots: Vec<Mutex<PointOutcome>> = points.iter().map(|_| Mutex::default()).collect();
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map(|w| w.get())
        .unwrap_or(1)
        .min(points.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(n, r)) = points.get(i) else {
                    break;
                };
                let ctx = FrameContext::new(n, r).expect("pre-filtered grid point");
                let mut outcome = PointOutcome::default();
                certify_shape(&ctx, &mut outcome);
                *slots[i].lock().expect("worker holding the slot never panics") = outcome;
            });
        }
    });

    let mut summary = CertifySummary::default();
    for slot in slots {
        let outcome = slot.into_inner().expect("sweep finished");
        summary.entries.extend(outcome.entry);
        summary.failures.extend(outcome.failures);
    }
    summary
}
