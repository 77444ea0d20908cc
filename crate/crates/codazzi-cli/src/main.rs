//! `codazzi-lab` — command-line front end for the exact verification engine:
//! enumerates the normal-derivative residual table, replays the case
//! branches, builds the mean-curvature resultant, and certifies grids of
//! shapes. Stdout carries the report; stderr carries diagnostics.

mod config;
mod report;

use std::path::PathBuf;

use clap::Parser;
use codazzi_core::cases::{
    certify_theorem, run_case_a, run_case_b, run_case_c, run_case_d, section4_setup,
    spot_check_resultant, CasesError,
};
use codazzi_core::derive::table_report;
use codazzi_core::frame::{Compat, FrameContext};

use config::{CaseId, Cli, CommandKind, OutputFormat, RunConfig};
use report::{trace_values, Payload, SpotCheck};

/// Sample points drawn by the seeded resultant re-check.
const SPOT_TRIALS: usize = 4;

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = match RunConfig::from_cli(cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("usage error: {msg}");
            return 2;
        }
    };
    if config.idle_seed {
        eprintln!("note: --seed only affects the resultant command and is ignored here");
    }
    if config.idle_trace {
        eprintln!("note: --trace only affects verify-case and resultant and is ignored here");
    }

    let payload = execute(&config);
    let rendered = payload.render(&config);
    let mut exit = payload.status().exit_code();
    for line in payload.diagnostics() {
        eprintln!("{line}");
    }
    if let Some(issue) = check_golden(&config, &rendered) {
        eprintln!("{issue}");
        exit = exit.max(1);
    }
    print!("{rendered}");
    exit
}

fn execute(config: &RunConfig) -> Payload {
    match config.command {
        CommandKind::DeriveTable => with_context(config, |ctx| {
            Ok(Payload::Table(table_report(ctx, Compat::Printed)))
        }),
        CommandKind::VerifyCase => with_context(config, |ctx| {
            let s4 = section4_setup(ctx)?;
            let (report, resultant) = match config.case.expect("validated: case is present") {
                CaseId::A => (run_case_a(ctx, &s4)?, None),
                CaseId::B => (run_case_b(ctx, &s4)?, None),
                CaseId::C => (run_case_c(ctx, &s4)?, None),
                CaseId::D => {
                    let (rep, res) = run_case_d(ctx, &s4)?;
                    (rep, Some(res))
                }
            };
            let trace = config.trace.then(|| trace_values(&report.trace));
            Ok(Payload::Case {
                report,
                resultant,
                trace,
            })
        }),
        CommandKind::Resultant => with_context(config, |ctx| {
            let s4 = section4_setup(ctx)?;
            let (report, resultant) = run_case_d(ctx, &s4)?;
            let agreed = spot_check_resultant(ctx, &resultant, config.seed, SPOT_TRIALS)?;
            let spot = SpotCheck {
                seed: config.seed,
                trials: SPOT_TRIALS,
                agreed,
            };
            let trace = config.trace.then(|| trace_values(&report.trace));
            Ok(Payload::Resultant {
                report,
                resultant,
                spot,
                trace,
            })
        }),
        CommandKind::Certify => {
            let (n_range, span) = match config.grid {
                Some(g) => (g.min..=g.max, (g.min, g.max)),
                None => {
                    let n = config.n.expect("validated: certify without grid has n");
                    (n..=n, (n, n))
                }
            };
            let r_range = match config.r {
                Some(r) => r..=r,
                None => 3..=(span.1 - 2),
            };
            let summary = certify_theorem(n_range, r_range);
            Payload::Certify {
                summary,
                n_span: span,
            }
        }
    }
}

/// Builds the frame context for single-point commands and tags failures
/// with the module they came from.
fn with_context(
    config: &RunConfig,
    f: impl FnOnce(&FrameContext) -> Result<Payload, CasesError>,
) -> Payload {
    let n = config.n.expect("validated: single-point commands have n");
    let r = config.r.expect("validated: single-point commands have r");
    let ctx = match FrameContext::new(n, r) {
        Ok(ctx) => ctx,
        Err(e) => {
            return Payload::Failure {
                module: "frame",
                message: e.to_string(),
            }
        }
    };
    match f(&ctx) {
        Ok(p) => p,
        Err(e) => Payload::Failure {
            module: module_of(&e),
            message: e.to_string(),
        },
    }
}

fn module_of(e: &CasesError) -> &'static str {
    match e {
        CasesError::Frame(_) => "frame",
        CasesError::Engine(_) => "derive",
        _ => "cases",
    }
}

/// Compares the rendered report against a golden file when one exists for
/// this run. The directory defaults to `goldens` and is overridden by
/// CODAZZI_LAB_GOLDEN_DIR; a missing file or directory means no comparison.
fn check_golden(config: &RunConfig, rendered: &str) -> Option<String> {
    let dir = std::env::var_os("CODAZZI_LAB_GOLDEN_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("goldens"));
    let ext = match config.output {
        OutputFormat::Json => "json",
        OutputFormat::Markdown => "md",
    };
    let path = dir.join(format!("{}.{ext}", config.slug()));
    if !path.exists() {
        return None;
    }
    let expected = match std::fs::read_to_string(&path) {
        Ok(s) => s,
        Err(e) => return Some(format!("cli: golden file {} unreadable: {e}", path.display())),
    };
    if expected == rendered {
        return None;
    }
    let mut line_no = 1usize;
    let mut exp = expected.lines();
    let mut got = rendered.lines();
    loop {
        match (exp.next(), got.next()) {
            (Some(a), Some(b)) if a == b => line_no += 1,
            (a, b) => {
                return Some(format!(
                    "cli: output differs from golden {} at line {line_no}: expected `{}`, got `{}`",
                    path.display(),
                    a.unwrap_or("<end of file>"),
                    b.unwrap_or("<end of output>"),
                ))
            }
        }
    }
}
