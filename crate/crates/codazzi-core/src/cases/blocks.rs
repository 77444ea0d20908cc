//! The three block-role branches.
//!
//! Branch A forces both real blocks onto the complex pair; branches B and
//! C keep one block's in-plane rotation hypothesis (the *survivor* role)
//! and force the other (the *killed* role) onto the pair. B and C are the
//! same script with the block roles swapped, so both run through
//! [`block_case`] and differ only in the role table — the mirrored steps
//! are emitted into the trace under their own case id for audit.

use super::{
    eliminate_var, CaseReport, CaseStep, CasesError, Conclusion, Section4, StepStatus,
};
use crate::derive::{row, DerivationTrace, DeriveError, KnowledgeBase};
use crate::frame::{
    curvature_residual, derived_compat_relation, laplacian_expr, trace_s2, Class, Field,
    FrameContext,
};
use crate::poly::{rat, rat_int, Poly};

/// The role assignment distinguishing branches B and C.
struct BlockRoles {
    case: char,
    survivor: Class,
    survivor_tilde: Class,
    killed: Class,
    killed_field: Field,
    survivor_field: Field,
    /// Multiplicity of the survivor block.
    m: i64,
}

impl BlockRoles {
    fn case_b(ctx: &FrameContext) -> Self {
        BlockRoles {
            case: 'b',
            survivor: Class::A,
            survivor_tilde: Class::At,
            killed: Class::B,
            killed_field: Field::LamN1,
            survivor_field: Field::Lam3,
            m: ctx.r - 2,
        }
    }

    fn case_c(ctx: &FrameContext) -> Self {
        BlockRoles {
            case: 'c',
            survivor: Class::B,
            survivor_tilde: Class::Bt,
            killed: Class::A,
            killed_field: Field::Lam3,
            survivor_field: Field::LamN1,
            m: ctx.n - ctx.r - 1,
        }
    }

    fn survivor_tilde_live(&self, ctx: &FrameContext) -> bool {
        match self.survivor_tilde {
            Class::At => ctx.has_atilde(),
            Class::Bt => ctx.has_btilde(),
            _ => unreachable!("tilde role"),
        }
    }
}

/// Step recorder: numbers the steps of one branch and enforces that every
/// comparison against a display form succeeds, since each later step
/// builds on the display form of the previous one.
pub(super) struct Script<'c> {
    ctx: &'c FrameContext,
    case: char,
    pub(super) steps: Vec<CaseStep>,
}

impl<'c> Script<'c> {
    pub(super) fn new(ctx: &'c FrameContext, case: char) -> Self {
        Script {
            ctx,
            case,
            steps: Vec::new(),
        }
    }

    pub(super) fn next_id(&self) -> String {
        format!("case-{}/step-{}", self.case, self.steps.len() + 1)
    }

    pub(super) fn record(
        &mut self,
        op: &str,
        derived: String,
        expected: String,
        ok: bool,
    ) -> Result<(), CasesError> {
        let id = self.next_id();
        self.steps.push(CaseStep {
            id: id.clone(),
            op: op.to_string(),
            derived: derived.clone(),
            expected: expected.clone(),
            status: if ok { StepStatus::Match } else { StepStatus::Diff },
        });
        if ok {
            Ok(())
        } else {
            Err(CasesError::ShapeMismatch {
                step: id,
                derived,
                expected,
            })
        }
    }

    /// Derived row must equal the display form exactly, term for term.
    pub(super) fn check_exact(&mut self, op: &str, derived: &Poly, display: &Poly) -> Result<(), CasesError> {
        let ok = derived == display;
        self.record(op, self.ctx.render(derived), self.ctx.render(display), ok)
    }

    /// Derived row must equal the display form up to rational content and
    /// overall sign.
    pub(super) fn check_normalized(
        &mut self,
        op: &str,
        derived: &Poly,
        display: &Poly,
    ) -> Result<(), CasesError> {
        let ok = derived.normalized() == display.normalized();
        self.record(op, self.ctx.render(derived), self.ctx.render(display), ok)
    }

    /// The display row must already be implied by the knowledge base.
    pub(super) fn check_implied(
        &mut self,
        kb: &KnowledgeBase,
        op: &str,
        display: &Poly,
    ) -> Result<(), CasesError> {
        let ok = kb.implies(display);
        self.record(
            op,
            self.ctx.render(&kb.canonical_row(display)),
            self.ctx.render(display),
            ok,
        )
    }

    /// Records an engine-state step with no display counterpart.
    pub(super) fn note(&mut self, op: &str, output: String) {
        let id = self.next_id();
        self.steps.push(CaseStep {
            id,
            op: op.to_string(),
            derived: output,
            expected: String::new(),
            status: StepStatus::Note,
        });
    }

    pub(super) fn blocked(&self, detail: impl Into<String>) -> CasesError {
        CasesError::Blocked {
            step: self.next_id(),
            detail: detail.into(),
        }
    }
}

/// Differentiating the vanishing scalar q² − μ² along e_n and resolving
/// against it leaves 2μ²·e_n(q) − 2qμ·e_n(μ), a row whose pivot is
/// certified by μ alone.
fn square_hypothesis_row(ctx: &FrameContext, f: Field) -> Result<Poly, CasesError> {
    let q = ctx.fpoly(f);
    let h = &q.pow(2) - &ctx.fpoly(Field::Mu).pow(2);
    let dh = ctx.derive(Class::En, &h)?;
    Ok(&(&q * &dh) - &(&ctx.dfpoly(Class::En, f).scale(&rat_int(2)) * &h))
}

/// Feeds the square-hypothesis row for field `f`; the engine then holds
/// e_n(f) = 0 and, through the torsion fact, zeroes the block's normal
/// rotation. Returns an error if either fails to appear.
fn kill_normal_rotation(
    ctx: &FrameContext,
    kb: &mut KnowledgeBase,
    trace: &mut DerivationTrace,
    script: &mut Script,
    block: Class,
    f: Field,
) -> Result<(), CasesError> {
    let id = script.next_id();
    kb.process_row(ctx, row(id, square_hypothesis_row(ctx, f)?), trace)?;
    let wv = ctx.conn_var(block, Class::En, block).expect("distinct indices");
    if !kb.is_zero_fact(ctx.dfield(Class::En, f)) || !kb.is_zero_fact(wv) {
        return Err(script.blocked(format!(
            "the {} block's normal rotation did not collapse",
            block.short()
        )));
    }
    script.note(
        &format!(
            "differentiate the {} block's eigenvalue square along e_n; its \
             normal derivative and normal rotation vanish",
            block.short()
        ),
        format!("w[{0},n,{0}] = 0", block.short()),
    );
    Ok(())
}

/// With a block's normal rotation already zero, the curvature identity on
/// its (block, e_n) plane collapses to a rational multiple of H times the
/// block eigenvalue; H is certified nonzero, so the eigenvalue vanishes.
fn flatten_block(
    ctx: &FrameContext,
    kb: &mut KnowledgeBase,
    trace: &mut DerivationTrace,
    script: &mut Script,
    block: Class,
    f: Field,
) -> Result<(), CasesError> {
    let res = curvature_residual(ctx, block, Class::En, Class::En, block, kb)?;
    let display = (&ctx.fpoly(Field::H) * &ctx.fpoly(f)).scale(&rat(-ctx.n, 2));
    let id = script.next_id();
    script.check_normalized(
        &format!(
            "curvature identity on the killed ({}, e_n) plane flattens its eigenvalue",
            block.short()
        ),
        &res,
        &display,
    )?;
    kb.install_field_fact(ctx, f, &Poly::zero(), &id, trace)?;
    Ok(())
}

/// Both real blocks sit on the complex pair: their normal derivatives die,
/// the torsion rows zero both normal rotations, and the normal balance
/// forces e_n(H) = 0 against the standing assumption.
pub fn run_case_a(ctx: &FrameContext, s4: &Section4) -> Result<CaseReport, CasesError> {
    let mut kb = s4.kb.clone();
    let mut trace = s4.trace.clone();
    let mut script = Script::new(ctx, 'a');
    let hypotheses: Vec<String> = [Field::Lam3, Field::LamN1]
        .into_iter()
        .map(|f| ctx.render(&(&ctx.fpoly(f).pow(2) - &ctx.fpoly(Field::Mu).pow(2))))
        .collect();

    kill_normal_rotation(ctx, &mut kb, &mut trace, &mut script, Class::A, Field::Lam3)?;
    kill_normal_rotation(ctx, &mut kb, &mut trace, &mut script, Class::B, Field::LamN1)?;

    match kb.process_row(ctx, row("case-a/normal-balance", s4.balance_row.clone()), &mut trace) {
        Err(DeriveError::Inconsistent {
            anchor,
            row: bad,
            stripped,
        }) => {
            script.note(
                "substitute both flattened rotations into the normal balance",
                format!("{bad} = 0 modulo {stripped:?}"),
            );
            Ok(finish(ctx, 'A', hypotheses, script, trace, anchor, stripped))
        }
        Err(e) => Err(e.into()),
        Ok(_) => Err(CasesError::Stalled { case: 'A' }),
    }
}

/// The shared survivor/killed pipeline behind branches B and C.
fn block_case(
    ctx: &FrameContext,
    s4: &Section4,
    roles: BlockRoles,
) -> Result<CaseReport, CasesError> {
    let mut kb = s4.kb.clone();
    let mut trace = s4.trace.clone();
    let mut script = Script::new(ctx, roles.case);
    let (n, m, s) = (ctx.n, roles.m, roles.m + 3);

    let mut hypotheses = Vec::new();
    let mut rot_classes = vec![roles.survivor];
    if roles.survivor_tilde_live(ctx) {
        rot_classes.push(roles.survivor_tilde);
    }
    for k in rot_classes {
        let p = ctx.conn(Class::E1, Class::E2, k);
        hypotheses.push(ctx.render(&p));
        kb.process_row(
            ctx,
            row(format!("case-{}/hyp-rotation", roles.case), p),
            &mut trace,
        )?;
    }
    hypotheses.push(ctx.render(
        &(&ctx.fpoly(roles.killed_field).pow(2) - &ctx.fpoly(Field::Mu).pow(2)),
    ));

    kill_normal_rotation(
        ctx,
        &mut kb,
        &mut trace,
        &mut script,
        roles.killed,
        roles.killed_field,
    )?;
    flatten_block(
        ctx,
        &mut kb,
        &mut trace,
        &mut script,
        roles.killed,
        roles.killed_field,
    )?;

    // The eigenvalue budget pins the survivor eigenvalue to H.
    let budget = kb.value_reduce(&s4.trace_row);
    let fv = ctx.field(roles.survivor_field);
    if budget.degree_in(fv) != 1 {
        return Err(script.blocked("the eigenvalue budget lost its survivor pivot"));
    }
    let coeffs = budget.coefficients_in(fv);
    let c = coeffs[0]
        .as_constant()
        .ok_or_else(|| script.blocked("survivor coefficient is not rational"))?;
    let value = coeffs[1].scale(&(-rat_int(1) / c));
    let id = script.next_id();
    script.check_exact(
        "solve the eigenvalue budget for the survivor eigenvalue",
        &value,
        &ctx.fpoly(Field::H).scale(&rat(3 * n, 2 * m)),
    )?;
    kb.install_field_fact(ctx, roles.survivor_field, &value, &id, &mut trace)?;

    // The orientation of record: w is the survivor's normal torsion
    // symbol; the display's rotation is −w.
    let wv = ctx
        .conn_var(roles.survivor, Class::En, roles.survivor)
        .expect("distinct indices");
    let w = Poly::var(wv);
    let dwv = ctx
        .dconn(Class::En, roles.survivor, Class::En, roles.survivor)
        .expect("distinct indices");
    let hp = ctx.fpoly(Field::H);
    let enh = ctx.dfield(Class::En, Field::H);
    let ennh = ctx.d2field(Class::En, Class::En, Field::H);
    let mu2 = ctx.fpoly(Field::Mu).pow(2);
    let alpha = ctx.fpoly(Field::Alpha);

    // The e_n(H) tie-down emerged when the survivor eigenvalue was pinned:
    // the torsion fact now reads s·H·w = −3·e_n(H).
    let row46 = &ctx.dfpoly(Class::En, Field::H).scale(&rat_int(3)) + &(&hp.scale(&rat_int(s)) * &w);
    script.check_implied(&kb, "e_n(H) ties to the survivor rotation", &row46)?;

    // All survivor-block rotations agree.
    if roles.survivor_tilde_live(ctx) {
        let wt = kb.value_reduce(&ctx.conn(roles.survivor_tilde, Class::En, roles.survivor_tilde));
        script.check_implied(&kb, "both survivor representatives rotate alike", &(&w - &wt))?;
    } else {
        script.note(
            "both survivor representatives rotate alike",
            "survivor block has a single member".into(),
        );
    }

    // The scalar balance of the mean curvature equation, oriented through
    // the metric-compatibility relation onto the torsion symbol.
    let lap = laplacian_expr(ctx, Field::H, &kb)?;
    let mut row48 = &(&lap + &(&hp * &kb.value_reduce(&trace_s2(ctx)))) - &(&alpha * &hp);
    let wnv = ctx
        .conn_var(roles.survivor, roles.survivor, Class::En)
        .expect("distinct indices");
    if row48.degree_in(wnv) > 0 {
        let compat = derived_compat_relation(ctx, roles.survivor, roles.survivor, Class::En);
        row48 = eliminate_var(&row48, &compat, wnv)
            .ok_or_else(|| script.blocked("cannot orient the scalar balance"))?;
    }
    let t48 = &(&(&Poly::var(ennh).scale(&rat_int(-1))
        - &(&w.scale(&rat_int(m)) * &ctx.dfpoly(Class::En, Field::H)))
        + &(&hp * &(&hp.pow(2).scale(&rat(n * n * (m + 9), 4 * m)) - &mu2.scale(&rat_int(2)))))
        - &(&alpha * &hp);
    script.check_exact("scalar balance of the mean curvature equation", &row48, &t48)?;

    // Curvature on the survivor (block, e_n) plane propagates the rotation.
    let row49 = curvature_residual(ctx, roles.survivor, Class::En, Class::En, roles.survivor, &kb)?;
    let t49 = &(&Poly::var(dwv).scale(&rat_int(-1)) - &w.pow(2))
        + &hp.pow(2).scale(&rat(3 * n * n, 4 * m));
    script.check_exact(
        "curvature identity on the survivor (block, e_n) plane",
        &row49,
        &t49,
    )?;

    // Differentiate the tie-down along e_n; substitute the rotation's
    // propagation and the tie-down itself.
    let d46 = ctx.derive(Class::En, &row46)?;
    let e = eliminate_var(&d46, &row49, dwv).ok_or_else(|| script.blocked("rotation derivative missing"))?;
    let row410 =
        eliminate_var(&e, &row46, enh).ok_or_else(|| script.blocked("e_n(H) missing"))?;
    let t410 = &(&Poly::var(ennh).scale(&rat_int(3))
        - &(&hp * &w.pow(2)).scale(&rat(s * (s + 3), 3)))
        + &hp.pow(3).scale(&rat(3 * n * n * s, 4 * m));
    script.check_normalized("differentiate the tie-down along e_n", &row410, &t410)?;

    // Eliminate both H-derivatives from the scalar balance; the common
    // factor H strips away.
    let e = eliminate_var(&row48, &row410, ennh).ok_or_else(|| script.blocked("e_ne_n(H) missing"))?;
    let e = if e.degree_in(enh) == 1 {
        eliminate_var(&e, &row46, enh).ok_or_else(|| script.blocked("e_n(H) missing"))?
    } else {
        e
    };
    let (row411, _) = kb.normalize_row(&e);
    let t411 = &(&w.pow(2).scale(&rat(2 * s * (m - 3), 3))
        + &hp.pow(2).scale(&rat(3 * n * n * (m + 6), 2 * m)))
        - &(&mu2.scale(&rat_int(6)) + &alpha.scale(&rat_int(3)));
    script.check_normalized(
        "eliminate the H-derivatives from the scalar balance",
        &row411,
        &t411,
    )?;

    // The tie-down licenses the rotation nonzero: a certified-nonzero
    // multiple of the rotation equals a certified-nonzero scalar.
    let cs = row46.coefficients_in(wv);
    if kb.certify(&cs[0]).is_none() || kb.certify(&cs[1]).is_none() || !kb.implies(&row46) {
        return Err(script.blocked("rotation nonzeroness is not licensed"));
    }
    kb.declare_nonzero(
        ctx,
        &format!("case-{}/rotation", roles.case),
        &w,
        &mut trace,
    );
    script.note(
        "the tie-down makes the survivor rotation nonzero",
        format!(
            "({}) * w = {}",
            ctx.render(&cs[0]),
            ctx.render(&cs[1].scale(&rat_int(-1)))
        ),
    );

    // Differentiate twice more along e_n; each pass substitutes the
    // propagation and the tie-down and divides by the nonzero rotation.
    // At survivor multiplicity 3 the quadratic term drops out and the
    // first pass already collapses to a nonzero multiple of H².
    let displays = [
        &w.pow(2).scale(&rat(2 * (m - 3), 3)) + &hp.pow(2).scale(&rat(9 * n * n, 2 * m)),
        &w.pow(2).scale(&rat(4 * (m - 3), 3)) + &hp.pow(2).scale(&rat(2 * n * n * (m + 6), m)),
    ];
    let mut prev = t411;
    for (k, t) in displays.iter().enumerate() {
        let d = kb.value_reduce(&ctx.derive(Class::En, &prev)?);
        let e = if d.degree_in(dwv) == 1 {
            eliminate_var(&d, &row49, dwv)
                .ok_or_else(|| script.blocked("rotation derivative missing"))?
        } else {
            d
        };
        let e = eliminate_var(&e, &row46, enh).ok_or_else(|| script.blocked("e_n(H) missing"))?;
        let (norm, _) = kb.normalize_row(&e);
        if norm.as_constant().is_some() {
            let id = script.next_id();
            return match kb.process_row(ctx, row(id, e), &mut trace) {
                Err(DeriveError::Inconsistent {
                    anchor,
                    row: bad,
                    stripped,
                }) => {
                    script.note(
                        "the differentiated row collapses to a nonzero constant",
                        format!("{bad} = 0 modulo {stripped:?}"),
                    );
                    Ok(finish(ctx, roles.case, hypotheses, script, trace, anchor, stripped))
                }
                Err(err) => Err(err.into()),
                Ok(_) => Err(CasesError::Stalled {
                    case: roles.case.to_ascii_uppercase(),
                }),
            };
        }
        script.check_normalized(
            &format!(
                "differentiate along e_n and divide by the rotation (pass {})",
                k + 1
            ),
            &norm,
            t,
        )?;
        prev = t.clone();
    }

    // The two quadratic rows have proportional rotation terms; their
    // resolvent is an exact positive rational multiple of H².
    let elim = &displays[1] - &displays[0].scale(&rat_int(2));
    let ecoeff = rat((2 * m + 3) * n * n, m);
    script.check_exact(
        "eliminate the rotation between the two quadratic rows",
        &elim,
        &hp.pow(2).scale(&ecoeff),
    )?;
    let id = script.next_id();
    match kb.process_row(ctx, row(id, elim), &mut trace) {
        Err(DeriveError::Inconsistent {
            anchor,
            row: bad,
            stripped,
        }) => {
            script.note(
                &format!("process the resolvent {ecoeff}·H²"),
                format!("{bad} = 0 modulo {stripped:?}"),
            );
            Ok(finish(ctx, roles.case, hypotheses, script, trace, anchor, stripped))
        }
        Err(e) => Err(e.into()),
        Ok(_) => Err(CasesError::Stalled {
            case: roles.case.to_ascii_uppercase(),
        }),
    }
}

fn finish(
    ctx: &FrameContext,
    case: char,
    hypotheses: Vec<String>,
    script: Script,
    trace: DerivationTrace,
    anchor: String,
    forced: Vec<String>,
) -> CaseReport {
    CaseReport {
        case: case.to_ascii_uppercase(),
        n: ctx.n,
        r: ctx.r,
        hypotheses,
        steps: script.steps,
        conclusion: Conclusion::Contradiction { anchor, forced },
        trace,
    }
}

/// First block keeps its rotation hypothesis, second is forced onto the
/// complex pair.
pub fn run_case_b(ctx: &FrameContext, s4: &Section4) -> Result<CaseReport, CasesError> {
    block_case(ctx, s4, BlockRoles::case_b(ctx))
}

/// Mirror of the previous branch with the block roles swapped.
pub fn run_case_c(ctx: &FrameContext, s4: &Section4) -> Result<CaseReport, CasesError> {
    block_case(ctx, s4, BlockRoles::case_c(ctx))
}
