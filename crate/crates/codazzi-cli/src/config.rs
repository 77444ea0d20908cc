//! Command-line surface: raw clap arguments and their validation into a
//! [`RunConfig`]. Every constraint violation is a usage error (exit 2),
//! reported before any engine work starts.

use std::fmt;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exact symbolic certification of the constant-mean-curvature theorem for
/// Lorentz hypersurfaces with a complex-eigenvalue shape-operator block.
#[derive(Debug, Parser)]
#[command(name = "codazzi-lab", version, max_term_width = 100)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Enumerate the 52-row normal-derivative residual table and compare
    /// every row against its printed reference form.
    DeriveTable(RawArgs),
    /// Replay one case branch (A, B, C, or D) step by step and report how
    /// it collapses.
    VerifyCase(RawArgs),
    /// Build the non-diagonal branch's eliminant pair and report the
    /// resultant constraint on the mean curvature.
    Resultant(RawArgs),
    /// Sweep a grid of shapes, run all four branches at every admissible
    /// point, and summarize the certificates.
    Certify(RawArgs),
}

impl CliCommand {
    fn kind(&self) -> CommandKind {
        match self {
            CliCommand::DeriveTable(_) => CommandKind::DeriveTable,
            CliCommand::VerifyCase(_) => CommandKind::VerifyCase,
            CliCommand::Resultant(_) => CommandKind::Resultant,
            CliCommand::Certify(_) => CommandKind::Certify,
        }
    }

    fn args(&self) -> &RawArgs {
        match self {
            CliCommand::DeriveTable(a)
            | CliCommand::VerifyCase(a)
            | CliCommand::Resultant(a)
            | CliCommand::Certify(a) => a,
        }
    }
}

/// The shared flag set; which combinations are legal depends on the
/// subcommand and is checked in [`RunConfig::from_cli`].
#[derive(Debug, Args)]
pub struct RawArgs {
    /// Ambient dimension of the hypersurface (at least 5).
    #[arg(long)]
    pub n: Option<i64>,

    /// Multiplicity of the repeated small eigenvalue (between 3 and n - 2).
    #[arg(long)]
    pub r: Option<i64>,

    /// Branch to replay (verify-case only).
    #[arg(long, value_enum)]
    pub case: Option<CaseId>,

    /// Inclusive dimension range MIN..MAX for the certification sweep
    /// (certify only).
    #[arg(long)]
    pub grid: Option<Grid>,

    /// Report format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Markdown)]
    pub output: OutputFormat,

    /// Attach the replayable derivation trace to the report.
    #[arg(long)]
    pub trace: bool,

    /// Seed for the randomized evaluation spot-checks (resultant only;
    /// defaults to 0).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    DeriveTable,
    VerifyCase,
    Resultant,
    Certify,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::DeriveTable => "derive-table",
            CommandKind::VerifyCase => "verify-case",
            CommandKind::Resultant => "resultant",
            CommandKind::Certify => "certify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseId {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
    #[value(name = "C", alias = "c")]
    C,
    #[value(name = "D", alias = "d")]
    D,
}

impl CaseId {
    pub fn letter(self) -> char {
        match self {
            CaseId::A => 'A',
            CaseId::B => 'B',
            CaseId::C => 'C',
            CaseId::D => 'D',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Markdown,
}

/// An inclusive dimension range written `MIN..MAX`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub min: i64,
    pub max: i64,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (min, max) = s
            .split_once("..")
            .ok_or_else(|| format!("expected MIN..MAX, got `{s}`"))?;
        let parse = |part: &str, side: &str| {
            part.trim()
                .parse::<i64>()
                .map_err(|_| format!("{side} bound `{part}` is not an integer"))
        };
        Ok(Grid {
            min: parse(min, "lower")?,
            max: parse(max, "upper")?,
        })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.min, self.max)
    }
}

/// A validated run: every field combination here is executable.
#[derive(Debug)]
pub struct RunConfig {
    pub command: CommandKind,
    pub n: Option<i64>,
    pub r: Option<i64>,
    pub case: Option<CaseId>,
    pub grid: Option<Grid>,
    pub output: OutputFormat,
    pub trace: bool,
    pub seed: u64,
    /// Set when --seed was given on a command that has no randomized check.
    pub idle_seed: bool,
    /// Set when --trace was given on a command that records no trace.
    pub idle_trace: bool,
}

/// Checks n ≥ 5 and 3 ≤ r ≤ n − 2.
fn check_shape(n: i64, r: i64) -> Result<(), String> {
    if n < 5 {
        return Err(format!("--n must be at least 5, got {n}"));
    }
    if r < 3 || r > n - 2 {
        return Err(format!(
            "--r must lie between 3 and n - 2 = {}, got {r}",
            n - 2
        ));
    }
    Ok(())
}

impl RunConfig {
    /// Validates the parsed command line. Errors are usage errors.
    pub fn from_cli(cli: Cli) -> Result<RunConfig, String> {
        let command = cli.command.kind();
        let args = cli.command.args();

        if (command == CommandKind::VerifyCase) != args.case.is_some() {
            return Err(if command == CommandKind::VerifyCase {
                "verify-case requires --case A|B|C|D".to_string()
            } else {
                format!("--case only applies to verify-case, not {}", command.as_str())
            });
        }
        if args.grid.is_some() && command != CommandKind::Certify {
            return Err(format!(
                "--grid only applies to certify, not {}",
                command.as_str()
            ));
        }

        match command {
            CommandKind::DeriveTable | CommandKind::VerifyCase | CommandKind::Resultant => {
                let n = args
                    .n
                    .ok_or_else(|| format!("{} requires --n", command.as_str()))?;
                let r = args
                    .r
                    .ok_or_else(|| format!("{} requires --r", command.as_str()))?;
                check_shape(n, r)?;
            }
            CommandKind::Certify => match (args.grid, args.n) {
                (Some(_), Some(_)) => {
                    return Err("certify takes either --grid or --n, not both".to_string());
                }
                (Some(grid), None) => {
                    if grid.min > grid.max {
                        return Err(format!(
                            "--grid lower bound {} exceeds upper bound {}",
                            grid.min, grid.max
                        ));
                    }
                    if grid.min < 5 {
                        return Err(format!(
                            "--grid dimensions must be at least 5, got {}",
                            grid.min
                        ));
                    }
                    if let Some(r) = args.r {
                        if r < 3 {
                            return Err(format!("--r must be at least 3, got {r}"));
                        }
                    }
                }
                (None, Some(n)) => {
                    let r = args.r.ok_or_else(|| {
                        "certify with --n also requires --r (or use --grid)".to_string()
                    })?;
                    check_shape(n, r)?;
                }
                (None, None) => {
                    return Err("certify requires --grid MIN..MAX or --n with --r".to_string());
                }
            },
        }

        let idle_seed = args.seed.is_some() && command != CommandKind::Resultant;
        let idle_trace = args.trace
            && !matches!(command, CommandKind::VerifyCase | CommandKind::Resultant);
        Ok(RunConfig {
            command,
            n: args.n,
            r: args.r,
            case: args.case,
            grid: args.grid,
            output: args.output,
            trace: args.trace,
            seed: args.seed.unwrap_or(0),
            idle_seed,
            idle_trace,
        })
    }

    /// Stable file stem identifying this run for golden comparison, e.g.
    /// `derive-table-n8-r4` or `verify-case-B-n8-r4`.
    pub fn slug(&self) -> String {
        let mut s = self.command.as_str().to_string();
        if let Some(case) = self.case {
            s.push('-');
            s.push(case.letter());
        }
        if let Some(grid) = self.grid {
            s.push_str(&format!("-grid{}-{}", grid.min, grid.max));
        }
        if let Some(n) = self.n {
            s.push_str(&format!("-n{n}"));
        }
        if let Some(r) = self.r {
            s.push_str(&format!("-r{r}"));
        }
        if self.command == CommandKind::Resultant {
            s.push_str(&format!("-seed{}", self.seed));
        }
        if self.trace {
            s.push_str("-trace");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(argv: &[&str]) -> Result<RunConfig, String> {
        let mut full = vec!["codazzi-lab"];
        full.extend_from_slice(argv);
        let cli = Cli::try_parse_from(full).map_err(|e| e.to_string())?;
        RunConfig::from_cli(cli)
    }

    #[test]
    fn accepts_the_documented_forms() {
        let c = parse(&["derive-table", "--n", "8", "--r", "4"]).unwrap();
        assert_eq!(c.command, CommandKind::DeriveTable);
        assert_eq!((c.n, c.r), (Some(8), Some(4)));
        assert_eq!(c.output, OutputFormat::Markdown);

        let c = parse(&[
            "verify-case", "--case", "B", "--n", "8", "--r", "4", "--output", "json",
        ])
        .unwrap();
        assert_eq!(c.case, Some(CaseId::B));
        assert_eq!(c.output, OutputFormat::Json);

        let c = parse(&["certify", "--grid", "6..10"]).unwrap();
        assert_eq!(c.grid, Some(Grid { min: 6, max: 10 }));
    }

    #[test]
    fn rejects_shape_bound_violations() {
        let err = parse(&["resultant", "--n", "4", "--r", "3"]).unwrap_err();
        assert!(err.contains("--n must be at least 5"), "{err}");
        let err = parse(&["derive-table", "--n", "8", "--r", "7"]).unwrap_err();
        assert!(err.contains("n - 2"), "{err}");
        let err = parse(&["derive-table", "--n", "8", "--r", "2"]).unwrap_err();
        assert!(err.contains("between 3"), "{err}");
    }

    #[test]
    fn case_goes_with_verify_case_only() {
        let err = parse(&["verify-case", "--n", "8", "--r", "4"]).unwrap_err();
        assert!(err.contains("requires --case"), "{err}");
        let err = parse(&["derive-table", "--n", "8", "--r", "4", "--case", "B"]).unwrap_err();
        assert!(err.contains("only applies to verify-case"), "{err}");
    }

    #[test]
    fn certify_grid_rules() {
        let err = parse(&["certify"]).unwrap_err();
        assert!(err.contains("requires --grid"), "{err}");
        let err = parse(&["certify", "--grid", "10..6"]).unwrap_err();
        assert!(err.contains("exceeds"), "{err}");
        let err = parse(&["certify", "--grid", "4..6"]).unwrap_err();
        assert!(err.contains("at least 5"), "{err}");
        let err = parse(&["certify", "--grid", "6..8", "--n", "8"]).unwrap_err();
        assert!(err.contains("not both"), "{err}");
        let err = parse(&["derive-table", "--n", "8", "--r", "4", "--grid", "6..8"]).unwrap_err();
        assert!(err.contains("only applies to certify"), "{err}");
        assert!(parse(&["certify", "--n", "8", "--r", "4"]).is_ok());
    }

    #[test]
    fn grid_syntax_errors_are_reported() {
        let err = parse(&["certify", "--grid", "6-10"]).unwrap_err();
        assert!(err.contains("MIN..MAX"), "{err}");
        let err = parse(&["certify", "--grid", "six..10"]).unwrap_err();
        assert!(err.contains("not an integer"), "{err}");
    }

    #[test]
    fn slugs_are_stable_and_distinct() {
        let a = parse(&["derive-table", "--n", "8", "--r", "4"]).unwrap();
        assert_eq!(a.slug(), "derive-table-n8-r4");
        let b = parse(&["verify-case", "--case", "B", "--n", "8", "--r", "4"]).unwrap();
        assert_eq!(b.slug(), "verify-case-B-n8-r4");
        let c = parse(&["resultant", "--n", "8", "--r", "4", "--seed", "7"]).unwrap();
        assert_eq!(c.slug(), "resultant-n8-r4-seed7");
        let d = parse(&["certify", "--grid", "6..10"]).unwrap();
        assert_eq!(d.slug(), "certify-grid6-10");
    }

    #[test]
    fn idle_flags_are_detected() {
        let c = parse(&["derive-table", "--n", "8", "--r", "4", "--seed", "3", "--trace"]).unwrap();
        assert!(c.idle_seed && c.idle_trace);
        let c = parse(&["resultant", "--n", "8", "--r", "4", "--seed", "3", "--trace"]).unwrap();
        assert!(!c.idle_seed && !c.idle_trace);
        let c = parse(&["verify-case", "--case", "A", "--n", "8", "--r", "4", "--trace"]).unwrap();
        assert!(!c.idle_trace);
    }
}
