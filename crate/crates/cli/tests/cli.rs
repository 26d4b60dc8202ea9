use std::process::{Command, Output};

use chase_escape::harness::{parse_trajectory_csv, EstimatorSummary};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chase-escape")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

#[test]
fn simulate_k101_rows_conserve_and_end_without_red() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let p = path.to_str().unwrap();
    stdout(&["simulate", "--n", "100", "--lambda", "1", "--alpha", "4", "--seed", "7", "--output", p]);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("jump_index,time,r,b,w,event\n"));
    let traj = parse_trajectory_csv(&text).unwrap();
    traj.validate().unwrap();
    assert!(traj.jumps.iter().all(|j| j.state.total() == 101));
    assert_eq!(traj.jumps.last().unwrap().state.r, 0);
}

#[test]
fn simulate_n1_has_at_most_four_rows() {
    for seed in 0..50 {
        let s = seed.to_string();
        let text = stdout(&["simulate", "--n", "1", "--seed", &s]);
        let rows = text.lines().count() - 1;
        assert!((1..=4).contains(&rows), "seed {seed}: {rows} rows");
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    for engine in ["chain", "graph", "coupling"] {
        let args = ["simulate", "--n", "40", "--alpha", "2", "--seed", "99", "--engine", engine];
        assert_eq!(stdout(&args), stdout(&args));
        let args = ["estimate", "--n", "20", "--alpha", "2", "--trials", "600", "--seed", "5", "--engine", engine];
        assert_eq!(stdout(&args), stdout(&args));
    }
}

#[test]
fn estimate_is_independent_of_parallelism() {
    let base = ["estimate", "--n", "30", "--alpha", "2", "--trials", "1500", "--estimator", "expected-w"];
    let one = stdout(&[&base[..], &["--parallelism", "1"]].concat());
    let eight = stdout(&[&base[..], &["--parallelism", "8"]].concat());
    assert_eq!(one, eight);
    let parsed = EstimatorSummary::from_json(&one).unwrap();
    assert_eq!(parsed.to_json().unwrap() + "\n", one);
    assert!(parsed.ci95.0 <= parsed.estimate && parsed.estimate <= parsed.ci95.1);
}

#[test]
fn exact_n1_hand_values() {
    let v = json(&["exact", "--n", "1", "--lambda", "1", "--alpha", "1"]);
    assert_eq!(v["extinction_probability"], 0.5);
    assert_eq!(v["expected_w"], 0.5);
    assert_eq!(v["expected_c"], 1.25);
}

#[test]
fn exact_instant_conversion_and_init_equivalence() {
    let v = json(&["exact", "--n", "50", "--lambda", "2", "--alpha", "0.5"]);
    let top = v["distribution"][50].as_f64().unwrap();
    assert!((top - 0.5 / 100.5).abs() < 1e-12);

    let std = json(&["exact", "--n", "50", "--alpha", "1"]);
    let kort = json(&["exact", "--n", "50", "--alpha", "0", "--init", "kortchemski"]);
    assert_eq!(std["distribution"], kort["distribution"]);
}

#[test]
fn exact_csv_format() {
    let text = stdout(&["exact", "--n", "1", "--format", "csv"]);
    assert_eq!(text, "k,probability\n0,0.5\n1,0.5\n");
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"params": {"n": 1, "alpha": 1.0}}"#).unwrap();
    let v = json(&["exact", "--n", "9", "--alpha", "3", "--config", cfg.to_str().unwrap()]);
    assert_eq!(v["params"]["n"], 1);
    assert_eq!(v["expected_c"], 1.25);
}

#[test]
fn graph_file_drives_graph_engine() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("k4.txt");
    std::fs::write(&graph, "# K4\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n").unwrap();
    let g = graph.to_str().unwrap();
    let a = stdout(&["estimate", "--n", "3", "--alpha", "2", "--trials", "300", "--engine", "graph", "--graph-file", g]);
    let b = stdout(&["estimate", "--n", "3", "--alpha", "2", "--trials", "300", "--engine", "graph"]);
    assert_eq!(a, b, "an explicit K4 edge list must match the built-in complete graph");
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&["bogus"]), 2);
    assert_eq!(code(&["exact", "--n", "0"]), 2);
    assert_eq!(code(&["exact", "--lambda", "-1"]), 2);
    assert_eq!(code(&["estimate", "--n", "1", "--estimator", "conversion-over-log-n"]), 2);
    assert_eq!(code(&["estimate", "--trials", "0"]), 2);
    assert_eq!(code(&["estimate", "--engine", "coupling", "--init", "kortchemski", "--alpha", "0"]), 2);
    assert_eq!(code(&["simulate", "--trials", "5"]), 2);
    assert_eq!(code(&["simulate", "--graph-file", "/nonexistent/graph.txt", "--engine", "graph"]), 2);
    assert_eq!(code(&["exact", "--config", "/nonexistent/cfg.json"]), 2);
    assert_eq!(code(&["verify", "--level", "slow"]), 2);
}

#[test]
fn verify_fast_reports_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&["verify", "--level", "fast", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    let criteria = report["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 7);
    for c in criteria {
        assert_eq!(c["level"], "fast");
        for check in c["checks"].as_array().unwrap() {
            assert!(check.get("measured").is_some() && check.get("expected").is_some());
        }
    }
}
