use std::path::{Path, PathBuf};

use schedcheck::report::RunReport;
use schedcheck_core::checker::Verdict;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn fx(name: &str) -> String {
    fixtures().join(name).display().to_string()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("schedcheck").chain(args.iter().copied());
    let code = schedcheck::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn report(path: &Path) -> RunReport {
    RunReport::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn reachable_goal_exits_zero() {
    let (code, out, err) = run(&[
        "verify",
        "--config",
        &fx("analysis_six.conf"),
        "--trace",
        &fx("analysis_six.csv"),
        "--properties",
        &fx("goal0.props"),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("Valid?"));
    assert!(out.contains("true"));
}

#[test]
fn deadlock_is_found_with_a_witness() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let (code, _, err) = run(&[
        "verify",
        "--config",
        &fx("deadlock_cycle.conf"),
        "--trace",
        &fx("deadlock_cycle.csv"),
        "--properties",
        &fx("deadlock.props"),
        "--out",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let r = report(&json);
    assert_eq!(r.results[0].verdict, Verdict::Valid);
    let w = r.results[0].witness.as_ref().expect("witness");
    assert!(!w.steps.is_empty());
}

#[test]
fn invalid_assertion_exits_one_and_truth_adds_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let (code, out, _) = run(&[
        "verify",
        "--config",
        &fx("analysis_six.conf"),
        "--trace",
        &fx("analysis_six.csv"),
        "--properties",
        &fx("sample.props"),
        "--truth",
        "--out",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(out.contains("TP"));
    let r = report(&json);
    let a = r.analysis.expect("analysis");
    assert!((a.matrix.tp_pct - 50.0).abs() < 0.01);
    assert!((a.detected_failures.unwrap().df_pct - 50.0).abs() < 0.01);
}

#[test]
fn tiny_budget_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let (code, _, err) = run(&["gen", "--tasks", "200", "--seed", "3", "--out", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let (code, out, _) = run(&[
        "verify",
        "--config",
        &fx("saturated.conf"),
        "--trace",
        csv.to_str().unwrap(),
        "--properties",
        &fx("goal0.props"),
        "--state-budget",
        "100",
    ]);
    assert_eq!(code, 2);
    assert!(out.contains('?'));
}

#[test]
fn bad_arguments_exit_three() {
    assert_eq!(run(&["verify", "--config", "x.conf"]).0, 3);
    assert_eq!(run(&["frobnicate"]).0, 3);
    let (code, _, err) = run(&[
        "verify",
        "--config",
        "/nonexistent.conf",
        "--trace",
        &fx("timeout.csv"),
        "--properties",
        &fx("goal0.props"),
    ]);
    assert_eq!(code, 3);
    assert!(err.contains("nonexistent"));
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn analyze_picks_property_by_index_or_label() {
    let base = [
        "analyze",
        "--config",
        &fx("analysis_six.conf"),
        "--trace",
        &fx("analysis_six.csv"),
        "--properties",
        &fx("sample.props"),
    ];
    let mut by_index: Vec<&str> = base.to_vec();
    by_index.extend(["--property", "1"]);
    assert_eq!(run(&by_index).0, 0);
    let mut by_label: Vec<&str> = base.to_vec();
    by_label.extend(["--property", "cluster1 reaches goal0"]);
    assert_eq!(run(&by_label).0, 0);
    let mut out_of_range: Vec<&str> = base.to_vec();
    out_of_range.extend(["--property", "99"]);
    assert_eq!(run(&out_of_range).0, 3);
}

#[test]
fn report_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let (code, _, _) = run(&[
        "verify",
        "--config",
        &fx("analysis_six.conf"),
        "--trace",
        &fx("analysis_six.csv"),
        "--properties",
        &fx("sample.props"),
        "--truth",
        "--out",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    let r = report(&json);
    assert_eq!(RunReport::from_json(&r.to_json()).unwrap(), r);
    assert_eq!(r.schema_version, schedcheck::report::SCHEMA_VERSION);
}

#[test]
fn identity_whatif_reduces_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let (code, _, err) = run(&[
        "whatif",
        "--config",
        &fx("saturated.conf"),
        "--trace",
        &fx("saturated.csv"),
        "--out",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let r = report(&json);
    assert_eq!(r.comparisons.len(), 1);
    let red = r.comparisons[0].reduction.expect("reduction");
    assert_eq!(red.absolute_reduction_pts, 0.0);
    if let Some(rate) = red.reduction_rate_pct {
        assert_eq!(rate, 0.0);
    }
}

#[test]
fn node_sweep_lowers_queue_wait_failures() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let (code, out, err) = run(&[
        "whatif",
        "--config",
        &fx("saturated.conf"),
        "--trace",
        &fx("saturated.csv"),
        "--sweep",
        "nodes",
        "--values",
        "4,8,16",
        "--out",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("Scenario"));
    let r = report(&json);
    let waits: Vec<u64> = r.comparisons.iter().map(|c| c.scenario.queue_wait_failures().unwrap()).collect();
    assert_eq!(waits.len(), 3);
    assert!(waits[0] > waits[1] && waits[1] >= waits[2], "{waits:?}");
}

#[test]
fn exhaustive_whatif_reports_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let (code, _, err) = run(&[
        "whatif",
        "--config",
        &fx("timeout.conf"),
        "--trace",
        &fx("timeout.csv"),
        "--set",
        "task_timeout_ms=100000000",
        "--exhaustive",
        "--out",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let r = report(&json);
    assert_eq!(r.exhaustive.len(), 2);
    for e in &r.exhaustive {
        let (lo, hi) = (e.min_failure_pct.unwrap(), e.max_failure_pct.unwrap());
        assert!(lo <= hi);
    }
}

#[test]
fn gen_is_deterministic_per_seed() {
    let a = run(&["gen", "--profile", "opencloud-like", "--tasks", "300", "--seed", "9"]).1;
    let b = run(&["gen", "--profile", "opencloud-like", "--tasks", "300", "--seed", "9"]).1;
    let c = run(&["gen", "--profile", "opencloud-like", "--tasks", "300", "--seed", "10"]).1;
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().count(), 301);
}
