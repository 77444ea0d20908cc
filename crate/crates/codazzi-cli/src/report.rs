//! Report assembly: one typed payload per command, a shared status/exit
//! contract, and byte-deterministic JSON and markdown renderers.

use codazzi_core::cases::{CaseReport, CertifySummary, Conclusion, ResultantReport};
use codazzi_core::derive::{DerivationTrace, RowStatus, TableReport};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{OutputFormat, RunConfig};

/// Overall verdict of a run. Drives the exit code: success states exit 0,
/// everything else exits 1 (usage errors exit 2 before a report exists).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Every structural comparison against the stated reference form passed.
    Verified,
    /// A derived form disagrees with its stated reference form.
    Mismatch,
    /// The branch collapsed onto a certified-nonzero scalar, as it must.
    ContradictionAsExpected,
    /// A lower module failed; the report carries the tagged message.
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Verified | Status::ContradictionAsExpected => 0,
            Status::Mismatch | Status::Error => 1,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Status::Verified => "verified",
            Status::Mismatch => "mismatch",
            Status::ContradictionAsExpected => "contradiction-as-expected",
            Status::Error => "error",
        }
    }
}

/// Outcome of the seeded randomized re-check of the resultant.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpotCheck {
    pub seed: u64,
    pub trials: usize,
    pub agreed: usize,
}

/// What a command produced, kept typed so the markdown renderer does not
/// have to reparse JSON.
pub enum Payload {
    Table(TableReport),
    Case {
        report: CaseReport,
        /// Present when the replayed branch was the non-diagonal one.
        resultant: Option<ResultantReport>,
        trace: Option<Vec<Value>>,
    },
    Resultant {
        report: CaseReport,
        resultant: ResultantReport,
        spot: SpotCheck,
        trace: Option<Vec<Value>>,
    },
    Certify {
        summary: CertifySummary,
        n_span: (i64, i64),
    },
    Failure {
        module: &'static str,
        message: String,
    },
}

/// The serialized report envelope.
#[derive(Serialize)]
struct Envelope<'a> {
    schema: u32,
    command: &'a str,
    status: Status,
    artifacts: Value,
}

/// One human-readable sentence for how a branch ended.
pub fn conclusion_line(c: &Conclusion) -> String {
    match c {
        Conclusion::Contradiction { anchor, forced } => {
            let scalar = c.violated().unwrap_or("a certified-nonzero scalar");
            format!(
                "contradiction-as-expected: {scalar} = 0 (row `{anchor}` collapsed to a nonzero \
                 constant modulo {})",
                forced.join(", ")
            )
        }
        Conclusion::ConstantMeanCurvature { resultant_degree } => format!(
            "verified: the mean curvature obeys a nonzero polynomial constraint of degree \
             {resultant_degree} with constant coefficients, so it is constant"
        ),
    }
}

/// Parses a recorded trace into JSON values for embedding.
pub fn trace_values(trace: &DerivationTrace) -> Vec<Value> {
    trace
        .to_json_lines()
        .lines()
        .map(|line| serde_json::from_str(line).expect("trace lines are serialized JSON"))
        .collect()
}

impl Payload {
    pub fn status(&self) -> Status {
        match self {
            Payload::Table(t) => {
                if t.diff_count == 0 {
                    Status::Verified
                } else {
                    Status::Mismatch
                }
            }
            Payload::Case { report, .. } => {
                if !report.diff_ids().is_empty() {
                    Status::Mismatch
                } else {
                    match report.conclusion {
                        Conclusion::Contradiction { .. } => Status::ContradictionAsExpected,
                        Conclusion::ConstantMeanCurvature { .. } => Status::Verified,
                    }
                }
            }
            Payload::Resultant { report, spot, .. } => {
                if !report.diff_ids().is_empty() || spot.agreed < spot.trials {
                    Status::Mismatch
                } else {
                    Status::Verified
                }
            }
            Payload::Certify { summary, .. } => {
                if summary.all_certified() {
                    Status::Verified
                } else {
                    Status::Error
                }
            }
            Payload::Failure { .. } => Status::Error,
        }
    }

    /// Module-tagged diagnostic lines for stderr, one per defect.
    pub fn diagnostics(&self) -> Vec<String> {
        match self {
            Payload::Table(t) => t
                .rows
                .iter()
                .filter(|r| r.status == RowStatus::Diff)
                .map(|r| {
                    format!(
                        "derive: row {} derived `{}` but the stated form is `{}`",
                        r.id, r.derived, r.printed
                    )
                })
                .collect(),
            Payload::Case { report, .. } | Payload::Resultant { report, .. } => {
                let mut out: Vec<String> = report
                    .steps
                    .iter()
                    .filter(|s| report.diff_ids().contains(&s.id.as_str()))
                    .map(|s| {
                        format!(
                            "cases: step {} derived `{}` but the stated form is `{}`",
                            s.id, s.derived, s.expected
                        )
                    })
                    .collect();
                if let Payload::Resultant { spot, .. } = self {
                    if spot.agreed < spot.trials {
                        out.push(format!(
                            "cases: only {}/{} seeded sample points matched the resultant \
                             (seed {})",
                            spot.agreed, spot.trials, spot.seed
                        ));
                    }
                }
                out
            }
            Payload::Certify { summary, .. } => summary
                .failures
                .iter()
                .map(|f| format!("cases: {f}"))
                .collect(),
            Payload::Failure { module, message } => vec![format!("{module}: {message}")],
        }
    }

    fn artifacts(&self) -> Value {
        match self {
            Payload::Table(t) => json!({ "table": t }),
            Payload::Case {
                report,
                resultant,
                trace,
            } => {
                let mut v = json!({
                    "case": report,
                    "conclusion": conclusion_line(&report.conclusion),
                });
                if let Some(res) = resultant {
                    v["resultant"] = json!(res);
                }
                if let Some(tr) = trace {
                    v["trace"] = json!(tr);
                }
                v
            }
            Payload::Resultant {
                report,
                resultant,
                spot,
                trace,
            } => {
                let mut v = json!({
                    "conclusion": conclusion_line(&report.conclusion),
                    "resultant": resultant,
                    "spot_check": spot,
                });
                if let Some(tr) = trace {
                    v["trace"] = json!(tr);
                }
                v
            }
            Payload::Certify { summary, .. } => json!({ "summary": summary }),
            Payload::Failure { module, message } => {
                json!({ "module": module, "message": message })
            }
        }
    }

    /// Renders the full report for stdout.
    pub fn render(&self, config: &RunConfig) -> String {
        match config.output {
            OutputFormat::Json => {
                let envelope = Envelope {
                    schema: 1,
                    command: config.command.as_str(),
                    status: self.status(),
                    artifacts: self.artifacts(),
                };
                let mut s = serde_json::to_string_pretty(&envelope)
                    .expect("reports serialize infallibly");
                s.push('\n');
                s
            }
            OutputFormat::Markdown => self.render_markdown(config),
        }
    }

    fn render_markdown(&self, config: &RunConfig) -> String {
        let mut md = String::new();
        let status = self.status();
        match self {
            Payload::Table(t) => {
                md.push_str(&format!(
                    "# Normal-derivative residual table — n = {}, r = {}\n\n",
                    t.n, t.r
                ));
                md.push_str(&format!(
                    "Status: {} — {} rows, {} MATCH, {} DIFF (convention: {}).\n\n",
                    status.as_str(),
                    t.rows.len(),
                    t.match_count,
                    t.diff_count,
                    t.convention
                ));
                md.push_str("| i | X | Y | Z | equation | status |\n");
                md.push_str("|---|---|---|---|----------|--------|\n");
                for row in &t.rows {
                    let (x, y, z) = split_triple(&row.triple);
                    let equation = if row.status == RowStatus::Match {
                        format!("`{} = 0`", cell(&row.derived))
                    } else {
                        format!(
                            "derived `{} = 0`, stated `{} = 0`",
                            cell(&row.derived),
                            cell(&row.printed)
                        )
                    };
                    let mut tag = match row.status {
                        RowStatus::Match => "MATCH".to_string(),
                        RowStatus::Diff => "DIFF".to_string(),
                    };
                    if row.vacuous {
                        tag.push_str(" (vacuous)");
                    }
                    md.push_str(&format!(
                        "| {} | {} | {} | {} | {} | {} |\n",
                        row.id, x, y, z, equation, tag
                    ));
                }
            }
            Payload::Case {
                report,
                resultant,
                trace,
            } => {
                md.push_str(&format!(
                    "# Branch replay — case {} at n = {}, r = {}\n\n",
                    report.case, report.n, report.r
                ));
                md.push_str(&format!("Status: {}.\n\n", status.as_str()));
                md.push_str("Hypotheses installed:\n");
                for h in &report.hypotheses {
                    md.push_str(&format!("- `{h} = 0`\n"));
                }
                md.push('\n');
                push_steps(&mut md, report);
                md.push_str(&format!(
                    "\nConclusion: {}\n",
                    conclusion_line(&report.conclusion)
                ));
                if let Some(res) = resultant {
                    md.push('\n');
                    push_resultant(&mut md, res);
                }
                if let Some(tr) = trace {
                    push_trace(&mut md, tr);
                }
            }
            Payload::Resultant {
                report,
                resultant,
                spot,
                trace,
            } => {
                md.push_str(&format!(
                    "# Mean-curvature eliminant — n = {}, r = {}\n\n",
                    resultant.n, resultant.r
                ));
                md.push_str(&format!("Status: {}.\n\n", status.as_str()));
                md.push_str(&format!(
                    "Branch conclusion: {}\n\n",
                    conclusion_line(&report.conclusion)
                ));
                push_resultant(&mut md, resultant);
                md.push_str(&format!(
                    "\nSeeded spot check: {}/{} sample points agree (seed {}).\n",
                    spot.agreed, spot.trials, spot.seed
                ));
                if let Some(tr) = trace {
                    push_trace(&mut md, tr);
                }
            }
            Payload::Certify { summary, n_span } => {
                md.push_str(&format!(
                    "# Certification sweep — n in {}..{}\n\n",
                    n_span.0, n_span.1
                ));
                md.push_str(&format!(
                    "Status: {} — {} of {} admissible points certified.\n\n",
                    status.as_str(),
                    summary.entries.len(),
                    summary.entries.len() + summary.failures.len()
                ));
                md.push_str(
                    "| n | r | case A | case B | case C | case D resultant degree | notes |\n",
                );
                md.push_str(
                    "|---|---|--------|--------|--------|--------------------------|-------|\n",
                );
                for e in &summary.entries {
                    md.push_str(&format!(
                        "| {} | {} | {} = 0 | {} = 0 | {} = 0 | {} | {} |\n",
                        e.n,
                        e.r,
                        e.case_a,
                        e.case_b,
                        e.case_c,
                        e.resultant_degree,
                        cell(&e.notes.join("; "))
                    ));
                }
                if !summary.failures.is_empty() {
                    md.push_str("\n## Failures\n\n");
                    for f in &summary.failures {
                        md.push_str(&format!("- {}\n", cell(f)));
                    }
                }
            }
            Payload::Failure { module, message } => {
                md.push_str(&format!("# {} — error\n\n", config.command.as_str()));
                md.push_str(&format!("Status: {}.\n\n", status.as_str()));
                md.push_str(&format!("{module}: {message}\n"));
            }
        }
        md
    }
}

fn push_steps(md: &mut String, report: &CaseReport) {
    md.push_str("| step | operation | derived | expected | status |\n");
    md.push_str("|------|-----------|---------|----------|--------|\n");
    for s in &report.steps {
        let status = format!("{:?}", s.status).to_uppercase();
        let expected = if s.expected.is_empty() {
            String::new()
        } else {
            format!("`{}`", cell(&s.expected))
        };
        md.push_str(&format!(
            "| {} | {} | `{}` | {} | {} |\n",
            s.id,
            cell(&s.op),
            cell(&s.derived),
            expected,
            status
        ));
    }
}

fn push_resultant(md: &mut String, res: &ResultantReport) {
    md.push_str(&format!("Resultant degree in H: {}.\n", res.degree_in_h));
    md.push_str(&format!(
        "Leading H-coefficient `{}` is certified nonzero at {} (value {}).\n\n",
        res.coefficients
            .first()
            .map(|c| c.poly_in_mu.as_str())
            .unwrap_or("0"),
        res.certificate_point,
        res.certificate_value
    ));
    md.push_str("| H power | coefficient (polynomial in mu) |\n");
    md.push_str("|---------|--------------------------------|\n");
    for c in &res.coefficients {
        md.push_str(&format!("| {} | `{}` |\n", c.h_power, cell(&c.poly_in_mu)));
    }
}

fn push_trace(md: &mut String, trace: &[Value]) {
    md.push_str("\n## Trace\n\n```json\n");
    for v in trace {
        md.push_str(&serde_json::to_string(v).expect("trace values reserialize"));
        md.push('\n');
    }
    md.push_str("```\n");
}

/// Splits the rendered `(x, y, z)` triple into its three slots.
fn split_triple(triple: &str) -> (&str, &str, &str) {
    let inner = triple
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .unwrap_or(triple);
    let mut parts = inner.split(", ");
    let x = parts.next().unwrap_or("?");
    let y = parts.next().unwrap_or("?");
    let z = parts.next().unwrap_or("?");
    (x, y, z)
}

/// Escapes the one character that would break a markdown table cell.
fn cell(s: &str) -> String {
    s.replace('|', "\\|")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triples_split_into_slots() {
        assert_eq!(split_triple("(2, 1, 1)"), ("2", "1", "1"));
        assert_eq!(split_triple("(A, n, At)"), ("A", "n", "At"));
    }

    #[test]
    fn statuses_map_to_exit_codes() {
        assert_eq!(Status::Verified.exit_code(), 0);
        assert_eq!(Status::ContradictionAsExpected.exit_code(), 0);
        assert_eq!(Status::Mismatch.exit_code(), 1);
        assert_eq!(Status::Error.exit_code(), 1);
    }
}
