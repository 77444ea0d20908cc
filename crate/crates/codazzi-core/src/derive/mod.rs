//! Exact deduction over frame symbols.
//!
//! The engine works on *rows* — polynomials asserted to vanish — and turns
//! them into *facts* — solved symbols — by Gaussian saturation in which every
//! pivot is certified nonzero against an explicit [`NonzeroSet`]. Nothing is
//! ever divided by an expression that is not certified, so each fact carries
//! its exact side conditions.
//!
//! Two reduction modes with different contracts:
//! - [`KnowledgeBase::value_reduce`] preserves the *value* of an expression:
//!   it substitutes only facts solved with an exactly invertible (rational)
//!   pivot. Safe inside computations like curvature residuals.
//! - [`KnowledgeBase::row_reduce`] preserves only *vanishing*: facts with
//!   polynomial pivots are eliminated by multiplying the row through by the
//!   certified pivot. Safe on equations.
//!
//! Rows that cannot be pivoted (no unknown has a certified coefficient) are
//! parked in `pending` and revisited after every new fact; a row that
//! reduces to a nonzero constant is a proof of inconsistency and surfaces as
//! [`DeriveError::Inconsistent`] — which, in the contradiction-hunting parts
//! of the pipeline, is the sought outcome.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::frame::{Class, Field, FrameContext, FrameError};
use crate::poly::{Poly, Var};

mod lemma;
mod table;

pub use lemma::{lemma31_lines, section3_closure, section3_rows, LemmaLine, LineStatus};
pub use table::{compat_closure, enumerate_codazzi, printed_equation, table_report, CodazziRow,
    RowStatus, TableReport, TableRowReport, TABLE_TRIPLES};

/// Errors from the deduction layer.
#[derive(Debug, Error)]
pub enum DeriveError {
    /// A frame-layer failure (inadmissible parameters, derivative depth, …).
    #[error(transparent)]
    Frame(#[from] FrameError),
    /// A row reduced to something that cannot vanish: after stripping
    /// certified-nonzero factors, a nonzero constant remained.
    #[error("inconsistent: row from {anchor} reduces to {row} (stripped nonzero factors {stripped:?})")]
    Inconsistent {
        anchor: String,
        row: String,
        stripped: Vec<String>,
    },
    /// Two independent derivations assigned different values to one symbol.
    #[error("conflicting values for {name}: {left} vs {right}")]
    ConflictingFact {
        name: String,
        left: String,
        right: String,
    },
}

/// A polynomial asserted to vanish, tagged with the identifier of the
/// identity it came from (a table row id, `metric-compat[...]`, a case step
/// label, …).
#[derive(Debug, Clone)]
pub struct LabeledRow {
    pub anchor: String,
    pub poly: Poly,
}

/// Convenience constructor for [`LabeledRow`].
pub fn row(anchor: impl Into<String>, poly: Poly) -> LabeledRow {
    LabeledRow {
        anchor: anchor.into(),
        poly,
    }
}

/// Scalars certified nonzero, with the anchor that justifies each.
///
/// A polynomial is *certified* when, after value reduction, it factors
/// exactly as a nonzero rational times a product of members. Certification
/// is deliberately incomplete: it proves nonzeroness or stays silent.
#[derive(Debug, Clone, Default)]
pub struct NonzeroSet {
    members: Vec<(String, Poly)>,
}

impl NonzeroSet {
    /// Declares a scalar nonzero. The member is stored normalized; repeats
    /// are ignored.
    pub fn declare(&mut self, anchor: impl Into<String>, p: &Poly) {
        assert!(!p.is_zero(), "cannot declare zero nonzero");
        let norm = p.normalized();
        if norm.as_constant().is_some() {
            return;
        }
        if self.members.iter().any(|(_, m)| *m == norm) {
            return;
        }
        self.members.push((anchor.into(), norm));
    }

    /// The declared members with their anchors.
    pub fn members(&self) -> impl Iterator<Item = (&str, &Poly)> {
        self.members.iter().map(|(a, m)| (a.as_str(), m))
    }

    /// Withdraws every member declared under `anchor`. Returns whether
    /// anything was removed.
    pub fn retract(&mut self, anchor: &str) -> bool {
        let before = self.members.len();
        self.members.retain(|(a, _)| a != anchor);
        self.members.len() != before
    }

    /// Number of declared members.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// True when nothing has been declared.
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// A solved symbol: `pivot · subject = value`, with `pivot` certified
/// nonzero. When the pivot is rational it is folded into the value
/// (`pivot = 1`), making the fact an exact substitution.
#[derive(Debug, Clone)]
pub struct Fact {
    pub subject: Var,
    pub pivot: Poly,
    pub value: Poly,
    /// Anchors of the rows this fact came from.
    pub provenance: Vec<String>,
    /// Anchors of the nonzero members its pivot (and any stripped factors)
    /// rest on.
    pub side_conditions: Vec<String>,
}

impl Fact {
    /// True when the fact is an exact substitution (rational pivot).
    pub fn is_explicit(&self) -> bool {
        self.pivot.as_constant().map_or(false, |c| c == crate::poly::rat_int(1))
    }
}

/// One recorded deduction step.
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub op: String,
    pub inputs: Vec<String>,
    pub output: String,
    pub anchor: String,
    pub side_conditions: Vec<String>,
}

/// An append-only log of deduction steps; serializes to one JSON object per
/// line, byte-deterministically.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DerivationTrace {
    pub steps: Vec<TraceStep>,
}

impl DerivationTrace {
    /// Appends one step, numbering it after the existing ones.
    pub fn push(
        &mut self,
        op: &str,
        inputs: Vec<String>,
        output: String,
        anchor: &str,
        side_conditions: Vec<String>,
    ) {
        self.steps.push(TraceStep {
            step: self.steps.len(),
            op: op.to_string(),
            inputs,
            output,
            anchor: anchor.to_string(),
            side_conditions,
        });
    }

    /// Appends another trace, renumbering its steps.
    pub fn extend(&mut self, other: DerivationTrace) {
        for s in other.steps {
            self.push(&s.op, s.inputs, s.output, &s.anchor, s.side_conditions);
        }
    }

    /// One JSON object per step, one step per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("trace steps serialize"));
            out.push('\n');
        }
        out
    }
}

/// Outcome of feeding one row to the knowledge base.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowOutcome {
    /// The row reduced to zero: already known.
    Trivial,
    /// The row pivoted into a fact for this symbol.
    Fact(Var),
    /// No certified pivot; the row is parked as a pending relation.
    Pending,
}

/// The deduction state: solved symbols, certified-nonzero scalars, and
/// still-unpivotable relations.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    facts: BTreeMap<Var, Fact>,
    nonzero: NonzeroSet,
    pending: Vec<LabeledRow>,
}

impl KnowledgeBase {
    /// A knowledge base with the given certified-nonzero scalars.
    pub fn new(nonzero: NonzeroSet) -> Self {
        Self {
            nonzero,
            ..Self::default()
        }
    }

    /// The certified-nonzero set.
    pub fn nonzero(&self) -> &NonzeroSet {
        &self.nonzero
    }

    /// Replaces the certified-nonzero set. Facts already pivoted on
    /// withdrawn members keep their side conditions; only future
    /// certifications are affected.
    pub fn set_nonzero(&mut self, nonzero: NonzeroSet) {
        self.nonzero = nonzero;
    }

    /// Declares a scalar nonzero, recording the step.
    pub fn declare_nonzero(
        &mut self,
        ctx: &FrameContext,
        anchor: &str,
        p: &Poly,
        trace: &mut DerivationTrace,
    ) {
        self.nonzero.declare(anchor, p);
        trace.push("nonzero", vec![ctx.render(p)], ctx.render(p), anchor, vec![]);
    }

    /// The fact for a symbol, if solved.
    pub fn fact(&self, v: Var) -> Option<&Fact> {
        self.facts.get(&v)
    }

    /// All facts in symbol order.
    pub fn facts(&self) -> impl Iterator<Item = (&Var, &Fact)> {
        self.facts.iter()
    }

    /// Number of solved symbols.
    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }

    /// The parked relations.
    pub fn pending(&self) -> &[LabeledRow] {
        &self.pending
    }

    /// True when the symbol is solved to exactly zero.
    pub fn is_zero_fact(&self, v: Var) -> bool {
        self.facts
            .get(&v)
            .map_or(false, |f| f.is_explicit() && f.value.is_zero())
    }

    /// Value-preserving reduction: substitutes facts with rational pivots,
    /// to a fixed point.
    pub fn value_reduce(&self, p: &Poly) -> Poly {
        let mut cur = p.clone();
        for _ in 0..=self.facts.len() {
            let mut bindings = BTreeMap::new();
            for v in cur.variables() {
                if let Some(f) = self.facts.get(&v) {
                    if f.is_explicit() {
                        bindings.insert(v, f.value.clone());
                    }
                }
            }
            if bindings.is_empty() {
                return cur;
            }
            cur = cur.substitute(&bindings);
        }
        unreachable!("explicit fact values never contain solved symbols");
    }

    /// Vanishing-preserving reduction: additionally eliminates symbols
    /// solved with polynomial pivots by multiplying the row through by the
    /// (certified nonzero) pivot.
    pub fn row_reduce(&self, p: &Poly) -> Poly {
        let mut cur = self.value_reduce(p);
        loop {
            let target = cur
                .variables()
                .into_iter()
                .find(|v| self.facts.get(v).is_some_and(|f| !f.is_explicit()));
            let Some(u) = target else {
                return cur;
            };
            let f = &self.facts[&u];
            let d = cur.degree_in(u);
            let coeffs = cur.coefficients_in(u);
            let mut acc = Poly::zero();
            for (i, c) in coeffs.iter().enumerate() {
                let k = d - i as u32;
                acc = &acc + &(&(c * &f.value.pow(k)) * &f.pivot.pow(d - k));
            }
            cur = self.value_reduce(&acc);
        }
    }

    /// The nonzero members, value-reduced through the current facts so that
    /// certification and stripping see them in the same form as the rows.
    fn effective_members(&self) -> Vec<(String, Poly)> {
        let mut out: Vec<(String, Poly)> = Vec::new();
        for (anchor, m) in self.nonzero.members() {
            let r = self.value_reduce(m).normalized();
            if r.as_constant().is_some() {
                continue;
            }
            if out.iter().any(|(_, q)| *q == r) {
                continue;
            }
            out.push((anchor.to_string(), r));
        }
        out
    }

    /// Certifies a scalar nonzero: after value reduction it must factor as
    /// a nonzero rational times a product of members. Returns the anchors
    /// used, or `None` when no certificate is found.
    pub fn certify(&self, p: &Poly) -> Option<Vec<String>> {
        let p = self.value_reduce(p);
        if p.is_zero() {
            return None;
        }
        if p.as_constant().is_some() {
            return Some(Vec::new());
        }
        let members = self.effective_members();
        let mut q = p.normalized();
        let mut anchors = Vec::new();
        'outer: loop {
            if q.as_constant().is_some() {
                return Some(anchors);
            }
            for (a, m) in &members {
                if let Some(next) = q.try_exact_div(m) {
                    q = next.normalized();
                    anchors.push(a.clone());
                    continue 'outer;
                }
            }
            return None;
        }
    }

    /// Canonicalizes a row: strips rational content, fixes the leading
    /// sign, and divides out certified-nonzero polynomial factors. Returns
    /// the normal form and the anchors of the stripped factors.
    pub fn normalize_row(&self, p: &Poly) -> (Poly, Vec<String>) {
        if p.is_zero() {
            return (Poly::zero(), Vec::new());
        }
        let members = self.effective_members();
        let mut cur = p.normalized();
        let mut stripped = Vec::new();
        loop {
            let mut changed = false;
            for (anchor, m) in &members {
                while !cur.as_constant().is_some() {
                    match cur.try_exact_div(m) {
                        Some(next) => {
                            cur = next;
                            stripped.push(anchor.clone());
                            changed = true;
                        }
                        None => break,
                    }
                }
            }
            if !changed {
                break;
            }
        }
        (cur.normalized(), stripped)
    }

    /// Full row canonical form: vanishing-preserving reduction followed by
    /// row normalization. Two rows are the same constraint modulo the
    /// current knowledge exactly when their canonical forms agree.
    pub fn canonical_row(&self, p: &Poly) -> Poly {
        self.normalize_row(&self.row_reduce(p)).0
    }

    /// True when the knowledge base already implies that `p` vanishes.
    pub fn implies(&self, p: &Poly) -> bool {
        self.canonical_row(p).is_zero()
    }

    /// Multivariate division of `p` by the canonical forms of the parked
    /// rows: repeatedly subtract term-quotient multiples of a divisor whose
    /// leading monomial divides the current leading monomial, moving
    /// irreducible leading terms to the remainder. Only the divisors are
    /// scaled, never `p`, so a zero remainder exhibits `p` as an explicit
    /// combination of parked relations.
    fn pending_remainder(p: Poly, divisors: &[Poly]) -> Poly {
        if divisors.is_empty() {
            return p;
        }
        let mut cur = p;
        let mut rem = Poly::zero();
        while let Some((lm, lc)) = cur
            .leading_term()
            .map(|(m, c)| (m.clone(), c.clone()))
        {
            let mut divided = false;
            for d in divisors {
                let (dm, dc) = d
                    .leading_term()
                    .map(|(m, c)| (m.clone(), c.clone()))
                    .expect("divisors are nonzero");
                if let Some(q) = lm.try_div(&dm) {
                    let factor = Poly::from_terms([(q, &lc / &dc)]);
                    cur = &cur - &(d * &factor);
                    divided = true;
                    break;
                }
            }
            if !divided {
                let t = Poly::from_terms([(lm, lc)]);
                rem = &rem + &t;
                cur = &cur - &t;
            }
        }
        rem
    }

    /// Number of independent constraints this base carries: installed facts
    /// plus the rank of the parked relations over the fraction field of the
    /// scalar coefficients. Parked rows are triangularized fraction-free
    /// (rows scaled by pivot coefficients, never divided), which computes
    /// the generic rank exactly. Returns `None` if a parked row is not
    /// linear in the unknown symbols, where rank is not defined.
    pub fn constraint_rank(&self, ctx: &FrameContext) -> Option<usize> {
        let mut rows: Vec<Poly> = Vec::new();
        for r in &self.pending {
            let c = self.canonical_row(&r.poly);
            if !c.is_zero() && !rows.contains(&c) {
                rows.push(c);
            }
        }
        for row in &rows {
            for (m, _) in row.terms() {
                let unknown_degree: u32 = m
                    .iter()
                    .filter(|(v, _)| ctx.is_unknown(*v))
                    .map(|(_, e)| e)
                    .sum();
                if unknown_degree > 1 {
                    return None;
                }
            }
        }
        let mut rank = self.facts.len();
        while let Some(pivot) = rows.pop() {
            rank += 1;
            let Some(u) = pivot
                .variables()
                .into_iter()
                .find(|v| ctx.is_unknown(*v))
            else {
                continue;
            };
            let cp = pivot.coefficients_in(u)[0].clone();
            rows = rows
                .into_iter()
                .map(|r| {
                    if r.degree_in(u) == 0 {
                        return r;
                    }
                    let cr = r.coefficients_in(u)[0].clone();
                    (&(&r * &cp) - &(&pivot * &cr)).normalized()
                })
                .filter(|r| !r.is_zero())
                .collect();
        }
        Some(rank)
    }

    /// True when everything this base knows (facts and parked relations)
    /// is implied by `other`. Two saturations of the same rows may orient
    /// their solved symbols differently, and one run may hold as a parked
    /// relation what another pivoted into facts, so a row counts as
    /// entailed when its reduction vanishes outright or falls in the span
    /// of the parked relations.
    pub fn entailed_by(&self, other: &KnowledgeBase) -> bool {
        let divisors: Vec<Poly> = other
            .pending
            .iter()
            .map(|r| other.canonical_row(&r.poly))
            .filter(|q| !q.is_zero())
            .collect();
        let entails = |p: &Poly| {
            let c = other.canonical_row(p);
            c.is_zero() || Self::pending_remainder(c, &divisors).is_zero()
        };
        self.facts.values().all(|f| {
            let eq = &(&f.pivot * &Poly::var(f.subject)) - &f.value;
            entails(&eq)
        }) && self.pending.iter().all(|r| entails(&r.poly))
    }

    /// Feeds one row to the engine: reduce, normalize, then either discard
    /// (zero), fail (nonzero constant), pivot into a fact, or park.
    pub fn process_row(
        &mut self,
        ctx: &FrameContext,
        input: LabeledRow,
        trace: &mut DerivationTrace,
    ) -> Result<RowOutcome, DeriveError> {
        let reduced = self.row_reduce(&input.poly);
        let (norm, stripped) = self.normalize_row(&reduced);
        if norm.is_zero() {
            trace.push(
                "zero",
                vec![ctx.render(&input.poly)],
                "0".to_string(),
                &input.anchor,
                stripped,
            );
            return Ok(RowOutcome::Trivial);
        }
        if norm.as_constant().is_some() {
            return Err(DeriveError::Inconsistent {
                anchor: input.anchor,
                row: ctx.render(&norm),
                stripped,
            });
        }
        let mut choice: Option<(Var, Poly, Poly, Vec<String>)> = None;
        for u in norm.variables() {
            if !ctx.is_unknown(u) || norm.degree_in(u) != 1 {
                continue;
            }
            let coeffs = norm.coefficients_in(u);
            debug_assert_eq!(coeffs.len(), 2);
            if let Some(cert) = self.certify(&coeffs[0]) {
                choice = Some((u, coeffs[0].clone(), coeffs[1].clone(), cert));
                break;
            }
        }
        let Some((subject, coeff, rest, cert)) = choice else {
            trace.push(
                "pending",
                vec![ctx.render(&input.poly)],
                ctx.render(&norm),
                &input.anchor,
                stripped,
            );
            self.pending.push(LabeledRow {
                anchor: input.anchor,
                poly: norm,
            });
            return Ok(RowOutcome::Pending);
        };
        let mut side = stripped;
        side.extend(cert);
        side.sort();
        side.dedup();
        let fact = match coeff.as_constant() {
            Some(c) => Fact {
                subject,
                pivot: Poly::one(),
                value: rest.scale(&(-crate::poly::rat_int(1) / c)),
                provenance: vec![input.anchor.clone()],
                side_conditions: side.clone(),
            },
            None => Fact {
                subject,
                pivot: coeff,
                value: rest.scale(&crate::poly::rat_int(-1)),
                provenance: vec![input.anchor.clone()],
                side_conditions: side.clone(),
            },
        };
        trace.push(
            "fact",
            vec![ctx.render(&input.poly)],
            render_fact(ctx, &fact),
            &input.anchor,
            side,
        );
        self.facts.insert(subject, fact);
        self.after_install(ctx, subject, trace)?;
        Ok(RowOutcome::Fact(subject))
    }

    /// Re-feeds every parked relation through `process_row`, picking up
    /// pivots that have become certifiable since the rows were parked
    /// (e.g. after a new nonzero declaration).
    pub fn revisit_pending(
        &mut self,
        ctx: &FrameContext,
        trace: &mut DerivationTrace,
    ) -> Result<(), DeriveError> {
        let parked = std::mem::take(&mut self.pending);
        for r in parked {
            self.process_row(ctx, r, trace)?;
        }
        Ok(())
    }

    /// Installs a solved scalar field (always an exact substitution), with
    /// derivative closure: e_i(f) and e_i(e_j(f)) follow by differentiating
    /// the value. Conflicts with existing derivative facts become new rows.
    pub fn install_field_fact(
        &mut self,
        ctx: &FrameContext,
        f: Field,
        value: &Poly,
        anchor: &str,
        trace: &mut DerivationTrace,
    ) -> Result<(), DeriveError> {
        let value = self.value_reduce(value);
        let mut installs = vec![(ctx.field(f), value.clone())];
        for dir in Class::ALL {
            let dv = ctx.derive(dir, &value)?;
            installs.push((ctx.dfield(dir, f), self.value_reduce(&dv)));
            for dir2 in Class::ALL {
                let ddv = ctx.derive(dir2, &dv)?;
                installs.push((ctx.d2field(dir2, dir, f), self.value_reduce(&ddv)));
            }
        }
        for (subject, val) in installs {
            self.install_explicit(ctx, subject, val, anchor, trace)?;
        }
        Ok(())
    }

    /// Installs subject = value (exact substitution). If the subject is
    /// already solved, the difference of the two derivations is processed
    /// as a new row instead of silently overwriting.
    fn install_explicit(
        &mut self,
        ctx: &FrameContext,
        subject: Var,
        value: Poly,
        anchor: &str,
        trace: &mut DerivationTrace,
    ) -> Result<(), DeriveError> {
        let value = self.value_reduce(&value);
        if let Some(old) = self.facts.get(&subject).cloned() {
            // pivot·subject = old.value and subject = value ⇒ the difference
            // pivot·value − old.value must vanish.
            let diff = &(&old.pivot * &value) - &old.value;
            if old.is_explicit() && self.value_reduce(&diff) == Poly::zero() {
                return Ok(());
            }
            self.process_row(
                ctx,
                row(format!("{anchor}&{}", old.provenance.join("&")), diff),
                trace,
            )?;
            if old.is_explicit() {
                // Keep the older substitution; the difference row carried
                // the new information.
                return Ok(());
            }
            // Replace a polynomial-pivot fact by the exact substitution.
            self.facts.remove(&subject);
        }
        let fact = Fact {
            subject,
            pivot: Poly::one(),
            value,
            provenance: vec![anchor.to_string()],
            side_conditions: vec![],
        };
        trace.push(
            "fact",
            vec![],
            render_fact(ctx, &fact),
            anchor,
            vec![],
        );
        self.facts.insert(subject, fact);
        self.after_install(ctx, subject, trace)
    }

    /// After a new fact: re-reduce every fact that mentions the new subject,
    /// then revisit all pending rows.
    fn after_install(
        &mut self,
        ctx: &FrameContext,
        new_subject: Var,
        trace: &mut DerivationTrace,
    ) -> Result<(), DeriveError> {
        let touched: Vec<Var> = self
            .facts
            .iter()
            .filter(|(s, f)| {
                **s != new_subject
                    && (f.value.contains(new_subject) || f.pivot.contains(new_subject))
            })
            .map(|(s, _)| *s)
            .collect();
        for s in touched {
            let old = self.facts.remove(&s).expect("listed above");
            let eq = &(&old.pivot * &Poly::var(s)) - &old.value;
            let eq = self.row_reduce(&eq);
            let (eq, mut extra) = self.normalize_row(&eq);
            if eq.is_zero() {
                // The fact became redundant (its content is now implied).
                continue;
            }
            if eq.degree_in(s) == 1 {
                let coeffs = eq.coefficients_in(s);
                if let Some(cert) = self.certify(&coeffs[0]) {
                    extra.extend(cert);
                    let mut side = old.side_conditions.clone();
                    side.extend(extra);
                    side.sort();
                    side.dedup();
                    let fact = match coeffs[0].as_constant() {
                        Some(c) => Fact {
                            subject: s,
                            pivot: Poly::one(),
                            value: coeffs[1].scale(&(-crate::poly::rat_int(1) / c)),
                            provenance: old.provenance.clone(),
                            side_conditions: side.clone(),
                        },
                        None => Fact {
                            subject: s,
                            pivot: coeffs[0].clone(),
                            value: coeffs[1].scale(&crate::poly::rat_int(-1)),
                            provenance: old.provenance.clone(),
                            side_conditions: side.clone(),
                        },
                    };
                    trace.push(
                        "update",
                        vec![ctx.name(new_subject).to_string()],
                        render_fact(ctx, &fact),
                        &old.provenance.join("&"),
                        side,
                    );
                    self.facts.insert(s, fact);
                    continue;
                }
            }
            // The subject can no longer be solved for; keep the content as
            // a pending relation.
            self.pending.push(LabeledRow {
                anchor: old.provenance.join("&"),
                poly: eq,
            });
        }
        let parked = std::mem::take(&mut self.pending);
        for r in parked {
            self.process_row(ctx, r, trace)?;
        }
        Ok(())
    }
}

impl crate::frame::Reducer for KnowledgeBase {
    fn reduce(&self, p: &Poly) -> Poly {
        self.value_reduce(p)
    }
}

/// Renders a fact as `subject = value` or `(pivot) * subject = value`.
pub fn render_fact(ctx: &FrameContext, f: &Fact) -> String {
    if f.is_explicit() {
        format!("{} = {}", ctx.name(f.subject), ctx.render(&f.value))
    } else {
        format!(
            "({}) * {} = {}",
            ctx.render(&f.pivot),
            ctx.name(f.subject),
            ctx.render(&f.value)
        )
    }
}

/// Feeds rows in order, returning the recorded trace.
pub fn saturate(
    ctx: &FrameContext,
    kb: &mut KnowledgeBase,
    rows: &[LabeledRow],
) -> Result<DerivationTrace, DeriveError> {
    let mut trace = DerivationTrace::default();
    for r in rows {
        kb.process_row(ctx, r.clone(), &mut trace)?;
    }
    Ok(trace)
}

/// The nonzero scalars every run starts from: the five eigenvalue
/// distinctness conditions that survive as polynomial statements, the
/// nonvanishing of μ, H, and e_n(H).
pub fn baseline_nonzero(ctx: &FrameContext) -> NonzeroSet {
    let mut set = NonzeroSet::default();
    let lam = ctx.fpoly(Field::Lam);
    let mu = ctx.fpoly(Field::Mu);
    let lam3 = ctx.fpoly(Field::Lam3);
    let lamn1 = ctx.fpoly(Field::LamN1);
    let nh2 = ctx.fpoly(Field::H).scale(&crate::poly::rat(ctx.n, 2));
    let mu2 = &mu * &mu;
    set.declare("nonzero:mu", &mu);
    set.declare("nonzero:H", &ctx.fpoly(Field::H));
    set.declare("nonzero:en-H", &ctx.dfpoly(Class::En, Field::H));
    set.declare("nonzero:block-gap", &(&lam3 - &lamn1));
    set.declare("nonzero:block1-vs-last", &(&lam3 + &nh2));
    set.declare("nonzero:block2-vs-last", &(&lamn1 + &nh2));
    let sq = |p: &Poly| p * p;
    set.declare("nonzero:complex-vs-block1", &(&sq(&(&lam - &lam3)) + &mu2));
    set.declare("nonzero:complex-vs-block2", &(&sq(&(&lam - &lamn1)) + &mu2));
    set.declare("nonzero:complex-vs-last", &(&sq(&(&lam + &nh2)) + &mu2));
    set
}

/// The gradient posture: grad H points along e_n, so e_i(H) = 0 for every
/// i ≠ n and consequently e_j(e_i(H)) = 0 for i ≠ n and every j. Returns a
/// knowledge base holding exactly these facts over [`baseline_nonzero`].
pub fn gradient_setup(ctx: &FrameContext) -> KnowledgeBase {
    let mut kb = KnowledgeBase::new(baseline_nonzero(ctx));
    let mut trace = DerivationTrace::default();
    for dir in Class::ALL {
        if dir == Class::En {
            continue;
        }
        kb.process_row(
            ctx,
            row("gradient-frame", ctx.dfpoly(dir, Field::H)),
            &mut trace,
        )
        .expect("a single-symbol row cannot be inconsistent");
    }
    for d1 in Class::ALL {
        for d2 in Class::ALL {
            if d2 == Class::En {
                continue;
            }
            kb.process_row(
                ctx,
                row(
                    "gradient-frame",
                    Poly::var(ctx.d2field(d1, d2, Field::H)),
                ),
                &mut trace,
            )
            .expect("a single-symbol row cannot be inconsistent");
        }
    }
    kb
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat_int;

    fn setup() -> (FrameContext, KnowledgeBase) {
        let ctx = FrameContext::new(8, 4).unwrap();
        let kb = KnowledgeBase::new(baseline_nonzero(&ctx));
        (ctx, kb)
    }

    #[test]
    fn pivot_with_stripping() {
        let (ctx, mut kb) = setup();
        let mut trace = DerivationTrace::default();
        let mu = ctx.fpoly(Field::Mu);
        let w = ctx.conn(Class::E1, Class::E2, Class::A);
        // μ·(w − μ) pivots to w = μ after stripping the certified factor μ.
        let r = &(&mu * &w) - &(&mu * &mu);
        let out = kb.process_row(&ctx, row("t", r), &mut trace).unwrap();
        let wv = ctx.conn_var(Class::E1, Class::E2, Class::A).unwrap();
        assert_eq!(out, RowOutcome::Fact(wv));
        assert_eq!(kb.value_reduce(&w), mu);
        let f = kb.fact(wv).unwrap();
        assert!(f.is_explicit());
        assert!(f.side_conditions.contains(&"nonzero:mu".to_string()));
    }

    #[test]
    fn nonzero_constant_is_inconsistent() {
        let (ctx, mut kb) = setup();
        let mut trace = DerivationTrace::default();
        let mu = ctx.fpoly(Field::Mu);
        let err = kb
            .process_row(&ctx, row("bad", &mu * &mu), &mut trace)
            .unwrap_err();
        match err {
            DeriveError::Inconsistent { anchor, stripped, .. } => {
                assert_eq!(anchor, "bad");
                assert_eq!(stripped, vec!["nonzero:mu", "nonzero:mu"]);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn polynomial_pivot_and_row_reduce() {
        let (ctx, mut kb) = setup();
        let mut trace = DerivationTrace::default();
        // (λ₃ + 4H)·ω_An^A + e_n(λ₃) = 0 — the pivot is certified by the
        // block1-vs-last member, but is not invertible, so the fact keeps
        // its pivot and only row reduction eliminates the symbol.
        let pivot = &ctx.fpoly(Field::Lam3) + &ctx.fpoly(Field::H).scale(&crate::poly::rat(8, 2));
        let w = ctx.conn(Class::A, Class::En, Class::A);
        let r = &(&pivot * &w) + &ctx.dfpoly(Class::En, Field::Lam3);
        kb.process_row(&ctx, row("t43", r.clone()), &mut trace).unwrap();
        let wv = ctx.conn_var(Class::A, Class::En, Class::A).unwrap();
        let f = kb.fact(wv).unwrap();
        assert!(!f.is_explicit());
        // value_reduce leaves the symbol; row_reduce eliminates it.
        assert!(kb.value_reduce(&w).contains(wv));
        assert!(kb.canonical_row(&r).is_zero());
        let probe = &(&pivot * &w) + &ctx.dfpoly(Class::En, Field::Lam3);
        assert!(kb.canonical_row(&probe).is_zero());
    }

    #[test]
    fn pending_rows_revisited_after_new_facts() {
        let (ctx, mut kb) = setup();
        let mut trace = DerivationTrace::default();
        let lam3 = ctx.fpoly(Field::Lam3);
        let mu = ctx.fpoly(Field::Mu);
        let w = ctx.conn(Class::E1, Class::E2, Class::A);
        // (λ₃² − μ²)·ω cannot pivot: the coefficient is not certified.
        let r = &(&(&lam3 * &lam3) - &(&mu * &mu)) * &w;
        let out = kb.process_row(&ctx, row("split", r), &mut trace).unwrap();
        assert_eq!(out, RowOutcome::Pending);
        assert_eq!(kb.pending().len(), 1);
        // Solving λ₃ = 0 turns the coefficient into −μ², which certifies.
        kb.install_field_fact(&ctx, Field::Lam3, &Poly::zero(), "hyp", &mut trace)
            .unwrap();
        assert!(kb.pending().is_empty());
        assert!(kb.value_reduce(&w).is_zero());
    }

    #[test]
    fn field_fact_closure_covers_derivatives() {
        let ctx = FrameContext::new(8, 4).unwrap();
        let mut kb = gradient_setup(&ctx);
        let mut trace = DerivationTrace::default();
        // λ₃ := 6H (the trace relation at n = 8, r = 4 once the other
        // eigenvalues vanish) forces e_n(λ₃) = 6 e_n(H) and kills e_1(λ₃).
        let v = ctx.fpoly(Field::H).scale(&rat_int(6));
        kb.install_field_fact(&ctx, Field::Lam3, &v, "test", &mut trace)
            .unwrap();
        let dn = kb.value_reduce(&ctx.dfpoly(Class::En, Field::Lam3));
        assert_eq!(dn, ctx.dfpoly(Class::En, Field::H).scale(&rat_int(6)));
        assert!(kb
            .value_reduce(&ctx.dfpoly(Class::E1, Field::Lam3))
            .is_zero());
        // Second derivatives close too: e_n e_n λ₃ = 6 e_n e_n H.
        let d2 = kb.value_reduce(&Poly::var(ctx.d2field(Class::En, Class::En, Field::Lam3)));
        let expect = Poly::var(ctx.d2field(Class::En, Class::En, Field::H)).scale(&rat_int(6));
        assert_eq!(d2, expect);
    }

    #[test]
    fn conflicting_closure_produces_difference_row() {
        let (ctx, mut kb) = setup();
        let mut trace = DerivationTrace::default();
        // First solve e_1(λ₃) = μ from a row, then install λ₃ = 0, whose
        // closure says e_1(λ₃) = 0. The difference μ = 0 is inconsistent.
        let r = &ctx.dfpoly(Class::E1, Field::Lam3) - &ctx.fpoly(Field::Mu);
        kb.process_row(&ctx, row("seed", r), &mut trace).unwrap();
        let err = kb.install_field_fact(&ctx, Field::Lam3, &Poly::zero(), "hyp", &mut trace);
        assert!(matches!(err, Err(DeriveError::Inconsistent { .. })));
    }

    #[test]
    fn gradient_setup_kills_tangential_derivatives() {
        let ctx = FrameContext::new(8, 4).unwrap();
        let kb = gradient_setup(&ctx);
        assert!(kb.value_reduce(&ctx.dfpoly(Class::A, Field::H)).is_zero());
        assert!(!kb.value_reduce(&ctx.dfpoly(Class::En, Field::H)).is_zero());
        let d2 = Poly::var(ctx.d2field(Class::En, Class::E1, Field::H));
        assert!(kb.value_reduce(&d2).is_zero());
        let d2n = Poly::var(ctx.d2field(Class::E1, Class::En, Field::H));
        assert!(!kb.value_reduce(&d2n).is_zero());
    }

    #[test]
    fn certification_uses_reduced_members() {
        let (ctx, mut kb) = setup();
        let mut trace = DerivationTrace::default();
        // (λ−λ₃)² + μ² is a member; after λ := 0 the reduced member
        // λ₃² + μ² must certify.
        kb.install_field_fact(&ctx, Field::Lam, &Poly::zero(), "hyp", &mut trace)
            .unwrap();
        let lam3 = ctx.fpoly(Field::Lam3);
        let mu = ctx.fpoly(Field::Mu);
        let p = &(&lam3 * &lam3) + &(&mu * &mu);
        let cert = kb.certify(&p).expect("reduced member certifies");
        assert_eq!(cert, vec!["nonzero:complex-vs-block1"]);
    }

    #[test]
    fn saturation_is_order_insensitive_on_a_small_system() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let ctx = FrameContext::new(8, 4).unwrap();
        let mu = ctx.fpoly(Field::Mu);
        let lam3 = ctx.fpoly(Field::Lam3);
        let u = ctx.conn(Class::E1, Class::A, Class::E1);
        let v = ctx.conn(Class::E1, Class::A, Class::E2);
        let t = ctx.conn(Class::E2, Class::A, Class::E1);
        // λ₃·u + μ·v = 0, μ·u − λ₃·v = 0 (det = −(λ₃²+μ²) not certified,
        // but pivoting on μ still resolves), and t − u = 0.
        let rows = [
            row("r1", &(&lam3 * &u) + &(&mu * &v)),
            row("r2", &(&mu * &u) - &(&lam3 * &v)),
            row("r3", &t - &u),
        ];
        let mut reference: Option<Vec<String>> = None;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..6 {
            let mut shuffled = rows.to_vec();
            shuffled.shuffle(&mut rng);
            let mut kb = KnowledgeBase::new(baseline_nonzero(&ctx));
            saturate(&ctx, &mut kb, &shuffled).unwrap();
            let mut summary: Vec<String> = [&u, &v, &t]
                .iter()
                .map(|p| ctx.render(&kb.canonical_row(p)))
                .collect();
            summary.push(kb.pending().len().to_string());
            match &reference {
                None => reference = Some(summary),
                Some(r) => assert_eq!(*r, summary),
            }
        }
    }

    #[test]
    fn trace_serialization_is_deterministic() {
        let (ctx, _) = setup();
        let run = || {
            let mut kb = KnowledgeBase::new(baseline_nonzero(&ctx));
            let mut trace = DerivationTrace::default();
            let mu = ctx.fpoly(Field::Mu);
            let w = ctx.conn(Class::E1, Class::E2, Class::A);
            kb.process_row(&ctx, row("a", &(&mu * &w) - &(&mu * &mu)), &mut trace)
                .unwrap();
            kb.process_row(&ctx, row("b", &w - &mu), &mut trace).unwrap();
            trace.to_json_lines()
        };
        let first = run();
        assert!(!first.is_empty());
        assert_eq!(first, run());
        assert!(first.lines().all(|l| l.starts_with('{')));
    }
}
