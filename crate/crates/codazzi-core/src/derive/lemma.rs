//! Closure of the structure equations and the covariant-derivative table.
//!
//! [`section3_closure`] saturates the full identity set — metric
//! compatibility, torsion applied to H, and all live Codazzi rows together
//! with their block-relabeled images — over the gradient posture. The
//! resulting knowledge base pins down which connection symbols vanish and
//! expresses the rest through eigenvalue derivatives.
//!
//! [`lemma31_lines`] then recomputes every displayed covariant derivative
//! ∇_{e_i} e_j from that knowledge base and checks it against the displayed
//! survivor pattern: each slot the display excludes must reduce to zero.
//! The engine is allowed to know *more* than the display (a strict subset
//! of survivors), never less.

use crate::frame::{bracket_rows, Class, Compat, Field, FrameContext};
use crate::poly::Poly;

use super::table::enumerate_codazzi;
use super::{row, saturate, DerivationTrace, DeriveError, KnowledgeBase, LabeledRow};

/// All identity rows of the closure, in fixed order: metric compatibility
/// (sign-blind convention, matching the printed table), torsion rows for H,
/// then the live Codazzi rows with their block-relabeled images.
pub fn section3_rows(ctx: &FrameContext) -> Vec<LabeledRow> {
    let mut rows: Vec<LabeledRow> = crate::frame::compat_rows(ctx, Compat::Printed)
        .into_iter()
        .map(|(a, p)| row(a, p))
        .collect();
    rows.extend(
        bracket_rows(ctx, Field::H)
            .into_iter()
            .map(|(a, p)| row(a, p)),
    );
    for r in enumerate_codazzi(ctx) {
        if r.vacuous {
            continue;
        }
        for img in ctx.relabel_closure(&r.raw) {
            let anchor = if img == r.raw {
                r.id.to_string()
            } else {
                format!("{}+sigma", r.id)
            };
            rows.push(row(anchor, img));
        }
    }
    rows
}

/// Saturates [`section3_rows`] over the gradient posture.
pub fn section3_closure(
    ctx: &FrameContext,
) -> Result<(KnowledgeBase, DerivationTrace), DeriveError> {
    let mut kb = super::gradient_setup(ctx);
    let trace = saturate(ctx, &mut kb, &section3_rows(ctx))?;
    Ok((kb, trace))
}

/// One line of the covariant-derivative table: ∇_{dir} e_arg recomputed
/// from the knowledge base, against the displayed exclusion pattern.
#[derive(Debug, Clone)]
pub struct LemmaLine {
    pub dir: Class,
    pub arg: Class,
    /// Slots the display claims are absent.
    pub displayed_excluded: Vec<Class>,
    /// Nonzero reduced components, slot by slot (absent classes skipped).
    pub components: Vec<(Class, Poly)>,
    /// True when the line involves a second block representative the
    /// current (n, r) does not have.
    pub vacuous: bool,
    pub status: LineStatus,
}

/// Verdict for one line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineStatus {
    /// Every excluded slot reduced to zero (the engine may exclude more).
    Consistent,
    /// A displayed-excluded slot survived reduction.
    Violation,
}

/// The 26 displayed lines in display order: (direction, argument, slots the
/// display excludes from the sum, read representative-by-representative).
const DISPLAY: [(Class, Class, &[Class]); 26] = {
    use Class::*;
    const ALL7: &[Class] = &[E1, E2, A, At, B, Bt, En];
    [
        (E1, E1, &[E1, En]),
        (E1, E2, &[E2, En]),
        (E1, A, &[A, En]),
        (E1, En, ALL7),
        (E2, E1, &[E1, En]),
        (E2, E2, &[E2, En]),
        (E2, A, &[A, En]),
        (E2, En, ALL7),
        (A, E1, &[E1, At, B, En]),
        (A, E2, &[E2, At, B, En]),
        (A, A, &[A]),
        (A, At, &[E1, E2, At, B, En]),
        (A, B, &[E1, E2, At, B, En]),
        (A, En, &[E1, E2, At, B, En]),
        (B, E1, &[E1, A, Bt, En]),
        (B, E2, &[E2, A, Bt, En]),
        (B, A, &[E1, E2, A, Bt, En]),
        (B, Bt, &[E1, E2, A, Bt, En]),
        (B, B, &[B]),
        (B, En, &[E1, E2, A, Bt, En]),
        (En, E1, &[E1, A, At, B, Bt, En]),
        (En, E2, &[E2, A, At, B, Bt, En]),
        (En, A, &[E1, E2, A, B, En]),
        (En, B, &[E1, E2, A, B, En]),
        (En, En, ALL7),
        (E2, B, &[B, En]),
    ]
};

/// Recomputes the 26 displayed covariant derivatives under the knowledge
/// base and scores each against its displayed exclusion pattern.
pub fn lemma31_lines(ctx: &FrameContext, kb: &KnowledgeBase) -> Vec<LemmaLine> {
    let absent = |c: Class| match c {
        Class::At => !ctx.has_atilde(),
        Class::Bt => !ctx.has_btilde(),
        _ => false,
    };
    DISPLAY
        .iter()
        .map(|&(dir, arg, excluded)| {
            let mut components = Vec::new();
            for k in Class::ALL {
                if absent(k) {
                    // An empty class contributes no slot to the sum.
                    continue;
                }
                let comp = kb.value_reduce(&ctx.conn(dir, arg, k));
                if !comp.is_zero() {
                    components.push((k, comp));
                }
            }
            let vacuous = absent(dir) || absent(arg);
            let status = if !vacuous
                && components.iter().any(|(k, _)| excluded.contains(k))
            {
                LineStatus::Violation
            } else {
                LineStatus::Consistent
            };
            LemmaLine {
                dir,
                arg,
                displayed_excluded: excluded.to_vec(),
                components,
                vacuous,
                status,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::table::compat_closure;
    use super::*;
    use crate::frame::FrameContext;
    use crate::poly::Var;

    fn closed() -> (FrameContext, KnowledgeBase) {
        let ctx = FrameContext::new(8, 4).unwrap();
        let (kb, _) = section3_closure(&ctx).unwrap();
        (ctx, kb)
    }

    fn assert_zero(ctx: &FrameContext, kb: &KnowledgeBase, syms: &[(Class, Class, Class)]) {
        for &(i, j, k) in syms {
            let p = ctx.conn(i, j, k);
            let red = kb.value_reduce(&p);
            assert!(
                red.is_zero(),
                "w[{},{},{}] reduces to {} instead of 0",
                i.short(),
                j.short(),
                k.short(),
                ctx.render(&red)
            );
        }
    }

    #[test]
    fn closure_orients_normal_components_of_the_complex_block() {
        use Class::*;
        let (ctx, kb) = closed();
        // The ω's mixing e₁, e₂ with e_n vanish in every arrangement.
        assert_zero(
            &ctx,
            &kb,
            &[
                (E1, E1, En),
                (E2, E2, En),
                (E1, E2, En),
                (E2, E1, En),
                (E1, En, E1),
                (E1, En, E2),
                (E2, En, E1),
                (E2, En, E2),
                (En, E1, En),
                (En, E2, En),
                (En, En, E1),
                (En, En, E2),
            ],
        );
    }

    #[test]
    fn closure_separates_the_real_blocks() {
        use Class::*;
        let (ctx, kb) = closed();
        // Block–block and block–normal mixing dies: first the six symbols
        // tying the two real blocks to e_n, then the tilde couplings, then
        // the couplings through e₁, e₂.
        assert_zero(
            &ctx,
            &kb,
            &[
                (A, B, En),
                (B, A, En),
                (A, En, B),
                (B, En, A),
                (En, B, A),
                (En, A, B),
                (B, Bt, A),
                (Bt, B, A),
                (A, At, B),
                (At, A, B),
                (A, B, E1),
                (A, B, E2),
                (B, A, E1),
                (B, A, E2),
                (A, E1, B),
                (A, E2, B),
                (B, E1, A),
                (B, E2, A),
                (E1, A, B),
                (E2, A, B),
                (E1, B, A),
                (E2, B, A),
            ],
        );
    }

    #[test]
    fn closure_decouples_blocks_from_the_complex_pair_and_the_normal_direction() {
        use Class::*;
        let (ctx, kb) = closed();
        assert_zero(
            &ctx,
            &kb,
            &[
                // block ↔ e_n couplings through e₁, e₂ directions
                (E1, A, En),
                (E2, A, En),
                (A, E1, En),
                (A, E2, En),
                (A, En, E1),
                (A, En, E2),
                (E1, B, En),
                (E2, B, En),
                (B, E1, En),
                (B, E2, En),
                (B, En, E1),
                (B, En, E2),
                // tilde mixing inside each block through e₁, e₂
                (A, E1, At),
                (A, E2, At),
                (A, At, E1),
                (A, At, E2),
                (At, E1, A),
                (At, E2, A),
                (At, A, E1),
                (At, A, E2),
                (B, E1, Bt),
                (B, E2, Bt),
                (B, Bt, E1),
                (B, Bt, E2),
                (Bt, E1, B),
                (Bt, E2, B),
                (Bt, B, E1),
                (Bt, B, E2),
                // the normal direction sees no block rotation
                (En, E1, A),
                (En, E2, A),
                (En, A, E1),
                (En, A, E2),
                (En, E1, B),
                (En, E2, B),
                (En, B, E1),
                (En, B, E2),
                (En, A, En),
                (En, B, En),
                (En, En, A),
                (En, En, B),
                // in-block normal couplings of the second representatives
                (A, En, At),
                (A, At, En),
                (B, En, Bt),
                (B, Bt, En),
            ],
        );
    }

    #[test]
    fn closure_kills_normal_derivatives_of_the_complex_eigenvalues() {
        let (ctx, kb) = closed();
        assert!(kb
            .value_reduce(&ctx.dfpoly(Class::En, Field::Lam))
            .is_zero());
        assert!(kb
            .value_reduce(&ctx.dfpoly(Class::En, Field::Mu))
            .is_zero());
    }

    #[test]
    fn closure_flattens_second_derivatives_of_h_into_the_normal_direction() {
        let (ctx, kb) = closed();
        for i in [Class::E1, Class::E2, Class::A, Class::At, Class::B, Class::Bt] {
            let d2 = Poly::var(ctx.d2field(i, Class::En, Field::H));
            assert!(
                kb.value_reduce(&d2).is_zero(),
                "e_{} e_n H should vanish",
                i.short()
            );
        }
        let d2nn = Poly::var(ctx.d2field(Class::En, Class::En, Field::H));
        assert!(!kb.value_reduce(&d2nn).is_zero());
    }

    #[test]
    fn normal_mixing_resolved_from_five_identities() {
        use Class::*;
        // A deliberately small input set: the three table rows that couple
        // the blocks to e_n, plus the two torsion rows and compatibility.
        let ctx = FrameContext::new(8, 4).unwrap();
        let mut kb = compat_closure(&ctx, Compat::Printed);
        let all = enumerate_codazzi(&ctx);
        let pick = |id: &str| {
            let r = all.iter().find(|r| r.id == id).unwrap();
            row(r.id, r.raw.clone())
        };
        let brackets: Vec<_> = bracket_rows(&ctx, Field::H)
            .into_iter()
            .filter(|(a, _)| a.contains("[1,2]") || a.contains("[A,B]"))
            .map(|(a, p)| row(a, p))
            .collect();
        let mut rows = brackets;
        rows.push(pick("T5"));
        rows.push(pick("T38"));
        rows.push(pick("T49"));
        saturate(&ctx, &mut kb, &rows).unwrap();
        assert_zero(
            &ctx,
            &kb,
            &[
                (A, B, En),
                (B, A, En),
                (A, En, B),
                (B, En, A),
                (En, B, A),
                (En, A, B),
            ],
        );
        // And the complex pair's normal components become opposite:
        // ω_11^n + ω_22^n reduces to zero while neither symbol is solved
        // to zero on its own.
        let sum = &ctx.conn(E1, E1, En) + &ctx.conn(E2, E2, En);
        assert!(kb.value_reduce(&sum).is_zero());
        assert!(!kb.value_reduce(&ctx.conn(E2, E2, En)).is_zero());
    }

    #[test]
    fn complex_normal_connection_resolved_in_two_stages() {
        use Class::*;
        let ctx = FrameContext::new(8, 4).unwrap();
        let mut kb = compat_closure(&ctx, Compat::Printed);
        let all = enumerate_codazzi(&ctx);
        let pick = |id: &str| {
            let r = all.iter().find(|r| r.id == id).unwrap();
            row(r.id, r.raw.clone())
        };
        // Stage one: the four rows coupling e₁, e₂ to e_n express every
        // ω_in^j through e_n(λ), e_n(μ), but nothing vanishes yet.
        saturate(
            &ctx,
            &mut kb,
            &[pick("T18"), pick("T34"), pick("T19"), pick("T33")],
        )
        .unwrap();
        let diag_diff = &ctx.conn(E1, E1, En) - &ctx.conn(E2, E2, En);
        let off_sum = &ctx.conn(E1, E2, En) + &ctx.conn(E2, E1, En);
        assert!(kb.implies(&diag_diff));
        assert!(kb.implies(&off_sum));
        assert!(!kb.implies(&ctx.conn(E1, E1, En)));
        // Stage two: adding the torsion row for (1,2) and the rows that
        // force ω_11^n = −ω_22^n collapses everything to zero, including
        // the normal derivatives of λ and μ.
        let brackets: Vec<_> = bracket_rows(&ctx, Field::H)
            .into_iter()
            .filter(|(a, _)| a.contains("[1,2]") || a.contains("[A,B]"))
            .map(|(a, p)| row(a, p))
            .collect();
        let mut stage2 = brackets;
        stage2.push(pick("T5"));
        stage2.push(pick("T38"));
        stage2.push(pick("T49"));
        saturate(&ctx, &mut kb, &stage2).unwrap();
        assert_zero(
            &ctx,
            &kb,
            &[
                (E1, E1, En),
                (E2, E2, En),
                (E1, E2, En),
                (E2, E1, En),
                (E1, En, E1),
                (E1, En, E2),
                (E2, En, E1),
                (E2, En, E2),
            ],
        );
        assert!(kb.value_reduce(&ctx.dfpoly(En, Field::Lam)).is_zero());
        assert!(kb.value_reduce(&ctx.dfpoly(En, Field::Mu)).is_zero());
    }

    #[test]
    fn covariant_derivative_table_matches_the_display() {
        let (ctx, kb) = closed();
        let lines = lemma31_lines(&ctx, &kb);
        assert_eq!(lines.len(), 26);
        for line in &lines {
            assert_eq!(
                line.status,
                LineStatus::Consistent,
                "∇_{} e_{} keeps components {:?}",
                line.dir.short(),
                line.arg.short(),
                line.components
                    .iter()
                    .map(|(k, p)| format!("{}: {}", k.short(), ctx.render(p)))
                    .collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn fully_resolved_table_lines_are_exact() {
        use Class::*;
        let (ctx, kb) = closed();
        let lines = lemma31_lines(&ctx, &kb);
        let find = |dir: Class, arg: Class| {
            lines
                .iter()
                .find(|l| l.dir == dir && l.arg == arg)
                .unwrap()
        };
        // Three lines vanish identically.
        assert!(find(E1, En).components.is_empty());
        assert!(find(E2, En).components.is_empty());
        assert!(find(En, En).components.is_empty());
        // ∇_n e_1 keeps exactly one term, a rotation toward e_2 (and
        // symmetrically for ∇_n e_2), surviving as a genuine unknown.
        let l = find(En, E1);
        assert_eq!(l.components.len(), 1);
        assert_eq!(l.components[0].0, E2);
        assert_eq!(l.components[0].1, kb.value_reduce(&ctx.conn(En, E1, E2)));
        assert!(!l.components[0].1.is_zero());
        let l = find(En, E2);
        assert_eq!(l.components.len(), 1);
        assert_eq!(l.components[0].0, E1);
        assert_eq!(l.components[0].1, kb.value_reduce(&ctx.conn(En, E2, E1)));
        // The in-block normal rotations survive — they drive the later
        // case analysis.
        assert!(!kb.value_reduce(&ctx.conn(A, En, A)).is_zero());
        assert!(!kb.value_reduce(&ctx.conn(B, En, B)).is_zero());
    }

    #[test]
    fn closure_is_confluent_over_row_permutations() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let ctx = FrameContext::new(8, 4).unwrap();
        let rows = section3_rows(&ctx);
        let mut kb0 = super::super::gradient_setup(&ctx);
        saturate(&ctx, &mut kb0, &rows).unwrap();
        // Shuffled orders may orient the solved symbols differently (which
        // member of an equal pair stays free is order-dependent), and an
        // unlucky order can leave a subsystem parked where another order
        // pivots it into facts. Agreement is therefore judged three ways:
        // nothing beyond the reference closure (every row certified by it),
        // no lost constraints (equal rank over the scalar fraction field),
        // and the same symbols solved to zero.
        let zeros: Vec<Var> = kb0
            .facts()
            .filter(|(_, f)| f.is_explicit() && f.value.is_zero())
            .map(|(v, _)| *v)
            .collect();
        assert!(!zeros.is_empty());
        let rank0 = kb0.constraint_rank(&ctx).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for round in 0..10 {
            let mut shuffled = rows.clone();
            shuffled.shuffle(&mut rng);
            let mut kb = super::super::gradient_setup(&ctx);
            saturate(&ctx, &mut kb, &shuffled).unwrap();
            assert!(kb.entailed_by(&kb0), "round {round}: extra content");
            assert_eq!(
                kb.constraint_rank(&ctx).unwrap(),
                rank0,
                "round {round}: lost content"
            );
            for &v in &zeros {
                assert!(
                    kb.is_zero_fact(v),
                    "round {round}: {} no longer solved to zero",
                    ctx.name(v)
                );
            }
        }
    }

    #[test]
    fn closure_trace_replays_byte_identically() {
        let ctx = FrameContext::new(8, 4).unwrap();
        let (_, t1) = section3_closure(&ctx).unwrap();
        let (_, t2) = section3_closure(&ctx).unwrap();
        let l1 = t1.to_json_lines();
        assert!(!l1.is_empty());
        assert_eq!(l1, t2.to_json_lines());
    }

    #[test]
    fn closure_holds_at_other_shapes() {
        for (n, r) in [(7, 4), (8, 5), (9, 6), (6, 3)] {
            let ctx = FrameContext::new(n, r).unwrap();
            let (kb, _) = section3_closure(&ctx).unwrap();
            assert!(kb.value_reduce(&ctx.conn(Class::A, Class::B, Class::En)).is_zero());
            assert!(kb.value_reduce(&ctx.dfpoly(Class::En, Field::Lam)).is_zero());
            assert!(!kb.value_reduce(&ctx.conn(Class::A, Class::En, Class::A)).is_zero());
            let lines = lemma31_lines(&ctx, &kb);
            for line in lines {
                // Lines about an absent second representative are vacuous
                // at this shape; the others must stay consistent.
                if line.vacuous {
                    continue;
                }
                assert_eq!(line.status, LineStatus::Consistent);
            }
        }
    }
}
