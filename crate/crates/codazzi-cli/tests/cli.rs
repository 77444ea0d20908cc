//! End-to-end tests of the `codazzi-lab` binary: exit-code contract, report
//! shapes in both formats, byte determinism, and golden-file comparison.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_codazzi-lab"))
}

/// Runs with golden comparison disabled so report content is the only thing
/// under test.
fn run(args: &[&str]) -> Output {
    bin()
        .args(args)
        .env("CODAZZI_LAB_GOLDEN_DIR", "/nonexistent/goldens")
        .output()
        .expect("binary spawns")
}

/// Runs against the goldens shipped with the crate.
fn run_with_shipped_goldens(args: &[&str]) -> Output {
    bin()
        .args(args)
        .env(
            "CODAZZI_LAB_GOLDEN_DIR",
            concat!(env!("CARGO_MANIFEST_DIR"), "/goldens"),
        )
        .output()
        .expect("binary spawns")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(out)).expect("stdout is a JSON report")
}

#[test]
fn usage_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &[],
        &["resultant", "--n", "4", "--r", "3"],
        &["derive-table", "--n", "8", "--r", "7"],
        &["verify-case", "--n", "8", "--r", "4"],
        &["derive-table", "--n", "8", "--r", "4", "--case", "B"],
        &["certify", "--grid", "10..6"],
        &["certify"],
        &["verify-case", "--case", "E", "--n", "8", "--r", "4"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "expected exit 2 for {args:?}, stderr: {}",
            stderr(&out)
        );
        assert!(stdout(&out).is_empty(), "usage errors emit no report");
    }
}

#[test]
fn help_exits_0() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("codazzi-lab"));
}

#[test]
fn derive_table_matches_the_printed_reference() {
    let out = run(&["derive-table", "--n", "8", "--r", "4"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let md = stdout(&out);
    assert!(md.contains("Status: verified — 52 rows, 52 MATCH, 0 DIFF"));
    assert_eq!(md.matches("| MATCH |").count(), 52);
    assert!(md.contains("| T43 |"), "rows carry their table ids");
}

#[test]
fn derive_table_json_has_the_envelope() {
    let out = run(&["derive-table", "--n", "8", "--r", "4", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "derive-table");
    assert_eq!(v["status"], "verified");
    assert_eq!(v["artifacts"]["table"]["rows"].as_array().unwrap().len(), 52);
    assert_eq!(v["artifacts"]["table"]["diff_count"], 0);
}

#[test]
fn verify_case_b_reports_the_contradiction() {
    let out = run(&["verify-case", "--case", "B", "--n", "8", "--r", "4"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let md = stdout(&out);
    assert!(
        md.contains("contradiction-as-expected: H = 0"),
        "report: {md}"
    );
    assert!(md.contains("Hypotheses installed:"));
}

#[test]
fn verify_case_a_pins_the_normal_derivative() {
    let out = run(&["verify-case", "--case", "A", "--n", "8", "--r", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("contradiction-as-expected: e_n(H) = 0"));
}

#[test]
fn verify_case_d_verifies_the_constant_mean_curvature() {
    let out = run(&["verify-case", "--case", "D", "--n", "8", "--r", "4", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["status"], "verified");
    assert_eq!(v["artifacts"]["resultant"]["degree_in_H"], 6);
    assert_eq!(
        v["artifacts"]["case"]["conclusion"]["resultant_degree"],
        6
    );
}

#[test]
fn resultant_spot_check_agrees_at_seeded_points() {
    for seed in ["0", "7", "12345"] {
        let out = run(&["resultant", "--n", "8", "--r", "4", "--output", "json", "--seed", seed]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
        let v = json(&out);
        assert_eq!(v["status"], "verified");
        assert_eq!(v["artifacts"]["spot_check"]["agreed"], 4);
        assert_eq!(v["artifacts"]["spot_check"]["trials"], 4);
        assert_eq!(v["artifacts"]["spot_check"]["seed"], seed.parse::<u64>().unwrap());
        assert_eq!(
            v["artifacts"]["resultant"]["coefficients"][0]["poly_in_mu"],
            "53311410410618880*mu^5"
        );
    }
}

#[test]
fn certify_single_point_and_sweep() {
    let out = run(&["certify", "--n", "8", "--r", "4", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let entries = v["artifacts"]["summary"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0]["case_a"], "e_n(H)");
    assert_eq!(entries[0]["case_b"], "H");
    assert_eq!(entries[0]["case_c"], "H");
    assert_eq!(entries[0]["resultant_degree"], 6);

    let out = run(&["certify", "--grid", "6..7", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let entries = v["artifacts"]["summary"]["entries"].as_array().unwrap();
    let points: Vec<(i64, i64)> = entries
        .iter()
        .map(|e| (e["n"].as_i64().unwrap(), e["r"].as_i64().unwrap()))
        .collect();
    assert_eq!(points, [(6, 3), (6, 4), (7, 3), (7, 4), (7, 5)]);
    assert!(v["artifacts"]["summary"]["failures"].as_array().unwrap().is_empty());
}

#[test]
fn output_is_byte_deterministic() {
    let first = run(&["certify", "--grid", "6..7", "--output", "json"]);
    let second = run(&["certify", "--grid", "6..7", "--output", "json"]);
    assert_eq!(first.stdout, second.stdout);
    let first = run(&["verify-case", "--case", "D", "--n", "8", "--r", "4", "--trace"]);
    let second = run(&["verify-case", "--case", "D", "--n", "8", "--r", "4", "--trace"]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn trace_attaches_the_derivation() {
    let out = run(&["verify-case", "--case", "B", "--n", "8", "--r", "4", "--trace"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("## Trace"));

    let out = run(&[
        "verify-case", "--case", "B", "--n", "8", "--r", "4", "--trace", "--output", "json",
    ]);
    let v = json(&out);
    assert!(!v["artifacts"]["trace"].as_array().unwrap().is_empty());

    let without = run(&["verify-case", "--case", "B", "--n", "8", "--r", "4", "--output", "json"]);
    assert!(json(&without)["artifacts"].get("trace").is_none());
}

#[test]
fn idle_flags_warn_but_do_not_fail() {
    let out = run(&["derive-table", "--n", "8", "--r", "4", "--seed", "3", "--trace"]);
    assert_eq!(out.status.code(), Some(0));
    let err = stderr(&out);
    assert!(err.contains("--seed only affects the resultant command"), "{err}");
    assert!(err.contains("--trace only affects verify-case and resultant"), "{err}");
}

#[test]
fn shipped_goldens_stay_current() {
    let configs: &[&[&str]] = &[
        &["derive-table", "--n", "8", "--r", "4"],
        &["verify-case", "--case", "B", "--n", "8", "--r", "4"],
        &["resultant", "--n", "8", "--r", "4", "--output", "json"],
        &["certify", "--grid", "6..10", "--output", "json"],
    ];
    for args in configs {
        let out = run_with_shipped_goldens(args);
        assert_eq!(
            out.status.code(),
            Some(0),
            "golden drift for {args:?}: {}",
            stderr(&out)
        );
    }
}

#[test]
fn golden_mismatch_fails_with_a_diff() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("derive-table-n8-r4.md"),
        "# a stale report\n",
    )
    .unwrap();
    let out = bin()
        .args(["derive-table", "--n", "8", "--r", "4"])
        .env("CODAZZI_LAB_GOLDEN_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("differs from golden"), "{err}");
    assert!(err.contains("at line 1"), "{err}");
    // The report itself is still written for inspection.
    assert!(stdout(&out).contains("Status: verified"));
}
