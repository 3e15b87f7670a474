//! End-to-end checks of the command-line surface: exit-status contract,
//! fault injection, output formats and column semantics.

use std::path::Path;
use std::process::{Command, Output};

fn qeraser(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qeraser"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_str(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 output")
}

#[test]
fn verify_passes_on_the_ideal_apparatus() {
    let output = qeraser(&["verify"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_str(&output);
    assert!(text.contains("[PASS] route-equivalence"));
    assert!(text.contains("[PASS] choice0-flatness"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn verify_names_the_failing_check_under_fault_injection() {
    let output = qeraser(&["verify", "--perturb-bs", "0.05"]);
    assert_eq!(output.status.code(), Some(1));
    let text = stdout_str(&output);
    assert!(text.contains("[FAIL] catalog-unitarity"));
}

#[test]
fn verify_json_format_is_machine_readable() {
    let output = qeraser(&["verify", "--format", "json"]);
    assert_eq!(output.status.code(), Some(0));
    let checks: serde_json::Value = serde_json::from_str(&stdout_str(&output)).unwrap();
    let names: Vec<&str> = checks
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"coincidence-probabilities"));
    assert!(names.contains(&"order-independence-random"));
    assert!(checks
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["pass"].as_bool().unwrap()));
}

#[test]
fn usage_errors_exit_2() {
    // Unknown flag, handled by the parser.
    assert_eq!(qeraser(&["simulate", "--bogus"]).status.code(), Some(2));
    // Grid with too few steps, rejected by the value parser.
    assert_eq!(
        qeraser(&["sweep", "--grid", "0:1:1", "--choice", "1"])
            .status
            .code(),
        Some(2)
    );
    // Zero trials, rejected at config validation.
    assert_eq!(
        qeraser(&["simulate", "--theta", "0", "--trials", "0"])
            .status
            .code(),
        Some(2)
    );
    // Out-of-range order-check dimension.
    assert_eq!(
        qeraser(&["order-check", "--max-dim", "7"]).status.code(),
        Some(2)
    );
}

#[test]
fn unwritable_output_path_exits_3() {
    let output = qeraser(&[
        "wheeler",
        "--grid",
        "0:1:3",
        "--choice",
        "0",
        "--out",
        "/nonexistent-dir/w.csv",
    ]);
    assert_eq!(output.status.code(), Some(3));
    let err = String::from_utf8(output.stderr).unwrap();
    assert!(err.contains("/nonexistent-dir/w.csv"));
}

#[test]
fn simulate_summary_reports_a_passing_verdict() {
    let output = qeraser(&[
        "simulate",
        "--theta",
        "1.5707963267948966",
        "--choice",
        "1",
        "--trials",
        "20000",
        "--seed",
        "7",
    ]);
    assert_eq!(output.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(&stdout_str(&output)).unwrap();
    assert_eq!(summary["pass"], serde_json::Value::Bool(true));
    assert_eq!(summary["config"]["choice_policy"], "1");
    let strata = summary["strata"].as_array().unwrap();
    assert_eq!(strata[0]["empty"], serde_json::Value::Bool(true));
    assert_eq!(strata[1]["total"], 20000);
}

#[test]
fn simulate_writes_records_and_summary_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let output = qeraser(&[
        "simulate",
        "--theta",
        "90deg",
        "--choice",
        "0",
        "--ordering",
        "environment-first",
        "--trials",
        "200",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let records = std::fs::read_to_string(&out).unwrap();
    let mut lines = records.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial_id,choice,env_detector,sys_detector,t_sys,t_choice,t_env,substream"
    );
    assert_eq!(records.lines().count(), 201);
    let first = lines.next().unwrap();
    let fields: Vec<&str> = first.split(',').collect();
    assert_eq!(fields[0], "0");
    assert_eq!(fields[1], "0");
    assert!(fields[2].starts_with("D"));
    // Environment-first ordering: choice at 1, env at 2, sys at 3.
    assert_eq!(&fields[4..8], &["3", "1", "2", "0"]);
    assert!(Path::new(&format!("{}.summary.json", out.display())).exists());
}

#[test]
fn simulate_json_records_parse() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.json");
    let output = qeraser(&[
        "simulate",
        "--theta",
        "0.3",
        "--trials",
        "50",
        "--seed",
        "2",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let records: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rows = records.as_array().unwrap();
    assert_eq!(rows.len(), 50);
    assert!(rows[0]["env_detector"].as_str().unwrap().starts_with('D'));
    assert_eq!(rows[0]["substream"], 0);
}

#[test]
fn analytic_sweep_matches_the_fringe_formula() {
    let output = qeraser(&[
        "sweep",
        "--grid",
        "-3.141592653589793:3.141592653589793:41",
        "--choice",
        "1",
        "--analytic-only",
    ]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_str(&output);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "theta,alpha,p13_analytic,p23_analytic,p14_analytic,p24_analytic,\
         c13_analytic,c23_analytic,c14_analytic,c24_analytic"
    );
    let mut rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[0] == "visibility" {
            let v: f64 = fields[2].parse().unwrap();
            assert!((v - 1.0).abs() < 1e-12, "visibility {v}");
            continue;
        }
        rows += 1;
        let theta: f64 = fields[0].parse().unwrap();
        let p13: f64 = fields[2].parse().unwrap();
        let alpha = theta / 2.0 + std::f64::consts::FRAC_PI_4;
        assert!((p13 - 0.5 * alpha.sin().powi(2)).abs() < 1e-12);
    }
    assert_eq!(rows, 41);
}

#[test]
fn choice0_sweep_is_flat_with_zero_visibility() {
    let output = qeraser(&[
        "sweep",
        "--grid",
        "-180deg:180deg:19",
        "--choice",
        "0",
        "--analytic-only",
    ]);
    assert_eq!(output.status.code(), Some(0));
    for line in stdout_str(&output).lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[0] == "visibility" {
            let v: f64 = fields[2].parse().unwrap();
            assert!(v.abs() < 1e-12);
        } else {
            for p in &fields[2..6] {
                let p: f64 = p.parse().unwrap();
                assert!((p - 0.25).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn sweep_with_trials_adds_empirical_columns() {
    let output = qeraser(&[
        "sweep",
        "--grid",
        "-3.14:3.14:5",
        "--choice",
        "1",
        "--trials",
        "2000",
        "--seed",
        "1",
    ]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_str(&output);
    let header = text.lines().next().unwrap();
    assert!(header.contains("p13_empirical"));
    assert!(header.contains("c24_empirical"));
    // Empirical frequencies sit near the analytic fringe at 2000 trials.
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[0] == "visibility" {
            continue;
        }
        let p13_analytic: f64 = fields[2].parse().unwrap();
        let p13_empirical: f64 = fields[6].parse().unwrap();
        assert!((p13_analytic - p13_empirical).abs() < 0.06);
    }
}

#[test]
fn wheeler_rows_behave_per_choice() {
    let removed = qeraser(&["wheeler", "--grid", "-3.14:3.14:9", "--choice", "0"]);
    assert_eq!(removed.status.code(), Some(0));
    for line in stdout_str(&removed).lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let p1: f64 = fields[1].parse().unwrap();
        let p2: f64 = fields[2].parse().unwrap();
        assert!((p1 - 0.5).abs() < 1e-12 && (p2 - 0.5).abs() < 1e-12);
    }

    let inserted = qeraser(&["wheeler", "--grid", "0deg:360deg:13", "--choice", "1"]);
    assert_eq!(inserted.status.code(), Some(0));
    let text = stdout_str(&inserted);
    let mut first_row = None;
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let p1: f64 = fields[1].parse().unwrap();
        let p2: f64 = fields[2].parse().unwrap();
        assert!((p1 + p2 - 1.0).abs() < 1e-12);
        first_row.get_or_insert((p1, p2));
    }
    // Zero phase lands on D2 under the pinned splitter convention.
    let (p1, p2) = first_row.unwrap();
    assert!(p1.abs() < 1e-12 && (p2 - 1.0).abs() < 1e-12);
}

#[test]
fn order_check_reports_worst_deviation() {
    let output = qeraser(&["order-check", "--samples", "20", "--max-dim", "3", "--seed", "4"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_str(&output);
    assert_eq!(
        text.lines().next().unwrap(),
        "section,index,dim_a,dim_b,theta,dev_a_first,dev_b_first"
    );
    assert!(text.lines().any(|l| l.starts_with("eraser,")));
    let worst = text.lines().last().unwrap();
    assert!(worst.starts_with("worst,"));
    let fields: Vec<&str> = worst.split(',').collect();
    let dev: f64 = fields[5].parse().unwrap();
    assert!(dev < 1e-12);
}
