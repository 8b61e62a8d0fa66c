//! End-to-end checks of the command-line interface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spcp"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    cmd.output().expect("binary runs")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

fn line5_args() -> Vec<String> {
    vec![
        "--matrix".into(),
        data("line5.matrix").display().to_string(),
        "--strata".into(),
        data("line5.strata.json").display().to_string(),
        "--p".into(),
        "2".into(),
    ]
}

#[test]
fn solve_line5_with_f1_finds_the_oracle_value() {
    let mut args: Vec<String> = vec!["solve".into()];
    args.extend(line5_args());
    args.extend(["--formulation".into(), "F1".into()]);
    let out = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let json = stdout_json(&out);
    assert_eq!(json["status"], "Optimal");
    assert!((json["objective"].as_f64().unwrap() - 2.8).abs() < 1e-9);
    assert_eq!(json["centers"].as_array().unwrap().len(), 2);
    assert_eq!(json["per_stratum_max"].as_array().unwrap().len(), 2);
}

#[test]
fn solve_rejects_p_below_two() {
    let mut args: Vec<String> = vec![
        "solve".into(),
        "--matrix".into(),
        data("line5.matrix").display().to_string(),
        "--p".into(),
        "1".into(),
    ];
    args.extend(["--formulation".into(), "F1".into()]);
    let out = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn unknown_formulation_is_a_config_error() {
    let mut args: Vec<String> = vec!["solve".into()];
    args.extend(line5_args());
    args.extend(["--formulation".into(), "F9".into()]);
    let out = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_output_is_deterministic_apart_from_timings() {
    let mut args: Vec<String> = vec!["solve".into()];
    args.extend(line5_args());
    args.extend(["--formulation".into(), "F5-agg53".into(), "--preprocess".into(), "binary".into()]);
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let mut a = stdout_json(&run(&argv));
    let mut b = stdout_json(&run(&argv));
    a.as_object_mut().unwrap().remove("timings");
    b.as_object_mut().unwrap().remove("timings");
    assert_eq!(a.to_string(), b.to_string());
}

#[test]
fn node_limit_exits_with_limit_code() {
    let mut args: Vec<String> = vec!["solve".into()];
    args.extend(line5_args());
    args.extend(["--formulation".into(), "F1".into(), "--node-limit".into(), "1".into()]);
    let out = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(3));
    // The incumbent report is still written.
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).expect("JSON");
    assert_eq!(json["status"], "Feasible");
}

#[test]
fn compare_agrees_across_all_formulations() {
    let mut args: Vec<String> = vec!["compare".into()];
    args.extend(line5_args());
    let out = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8_lossy(&out.stdout);
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("instance,n,p,spec,status,optimum,lp_value,lp_gap_pct"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 14, "13 base variants plus the starred default");
    for row in &rows {
        assert_eq!(row[4], "Optimal");
        let opt: f64 = row[5].parse().unwrap();
        assert!((opt - 2.8).abs() < 1e-6);
    }
    let gap_of = |spec: &str| -> String {
        rows.iter().find(|r| r[3] == spec).expect("row present")[7].to_string()
    };
    assert_eq!(gap_of("F2"), gap_of("F2prime"));
    assert_eq!(gap_of("F2"), gap_of("F5-F55"));
}

#[test]
fn preprocess_stats_orders_bounds_correctly() {
    let mut args: Vec<String> = vec!["preprocess-stats".into()];
    args.extend(line5_args());
    let out = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(out.status.success());
    let csv = String::from_utf8_lossy(&out.stdout);
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let pct_z: f64 = row[3].parse().unwrap();
    let pct_u_lp: f64 = row[4].parse().unwrap();
    let pct_u_binary: f64 = row[5].parse().unwrap();
    for v in [pct_z, pct_u_lp, pct_u_binary] {
        assert!((0.0..=100.0).contains(&v));
    }
    assert!(pct_u_binary >= pct_u_lp);
}

#[test]
fn preprocess_stats_fixes_everything_when_p_equals_n() {
    let args: Vec<String> = vec![
        "preprocess-stats".into(),
        "--matrix".into(),
        data("line5.matrix").display().to_string(),
        "--strata".into(),
        data("line5.strata.json").display().to_string(),
        "--p".into(),
        "5".into(),
    ];
    let out = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(out.status.success());
    let csv = String::from_utf8_lossy(&out.stdout);
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "100.0000");
}

#[test]
fn saa_writes_reports_with_exact_gap() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("report");
    let args: Vec<String> = vec![
        "saa".into(),
        "--matrix".into(),
        data("line5.matrix").display().to_string(),
        "--q".into(),
        data("q5.txt").display().to_string(),
        "--p".into(),
        "2".into(),
        "--seed".into(),
        "9".into(),
        "--out".into(),
        prefix.display().to_string(),
    ];
    let out = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(prefix.with_extension("csv")).unwrap();
    assert!(csv.lines().count() >= 2);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(prefix.with_extension("json")).unwrap())
            .unwrap();
    assert!(json["gap_vs_exact_pct"].is_number(), "small instance gets an exact gap");
    assert!(json["best_exact"].as_f64().unwrap() >= json["exact_optimum"].as_f64().unwrap() - 1e-12);

    // Reproducible rerun.
    let rerun_dir = tempfile::tempdir().unwrap();
    let prefix2 = rerun_dir.path().join("report");
    let mut args2 = args.clone();
    let last = args2.len() - 1;
    args2[last] = prefix2.display().to_string();
    let out2 = run(&args2.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(out2.status.success());
    let strip = |v: &mut serde_json::Value| {
        v.as_object_mut().unwrap().remove("timings");
    };
    let mut j1: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(prefix.with_extension("json")).unwrap())
            .unwrap();
    let mut j2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(prefix2.with_extension("json")).unwrap())
            .unwrap();
    strip(&mut j1);
    strip(&mut j2);
    assert_eq!(j1.to_string(), j2.to_string());
    assert_eq!(
        std::fs::read_to_string(prefix.with_extension("csv")).unwrap(),
        std::fs::read_to_string(prefix2.with_extension("csv")).unwrap()
    );
}

#[test]
fn export_writes_complete_deterministic_mps() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.mps");
    let mut args: Vec<String> = vec!["export".into()];
    args.extend(line5_args());
    args.extend([
        "--formulation".into(),
        "F5-agg53".into(),
        "--preprocess".into(),
        "binary-star".into(),
        "--out".into(),
        path.display().to_string(),
    ]);
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = run(&argv);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read_to_string(&path).unwrap();
    assert!(first.trim_end().ends_with("ENDATA"));
    for section in ["ROWS", "COLUMNS", "RHS", "BOUNDS"] {
        assert!(first.contains(section));
    }
    let out2 = run(&argv);
    assert!(out2.status.success());
    assert_eq!(first, std::fs::read_to_string(&path).unwrap());
}
