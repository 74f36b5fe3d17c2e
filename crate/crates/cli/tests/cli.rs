use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_consensus-certify"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn ex1_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/ex1_n3.json")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_hits_breakpoints_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = run(&["simulate", "--config", p(&ex1_config()), "--out", p(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    let times: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(times, vec![0.0, 1.5, 3.0, 4.5, 6.0]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(a.with_extension("json")).unwrap()).unwrap();
    assert_eq!(meta["config_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn zero_agents_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    let text = std::fs::read_to_string(ex1_config()).unwrap().replacen("\"n_agents\": 3", "\"n_agents\": 0", 1);
    std::fs::write(&cfg, text).unwrap();
    let o = run(&["simulate", "--config", p(&cfg), "--out", p(&dir.path().join("x.csv"))]);
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    let text = std::fs::read_to_string(ex1_config()).unwrap().replace("\"horizon\": 6.0", "\"horizon\": \"six\"");
    std::fs::write(&cfg, text).unwrap();
    let o = run(&["simulate", "--config", p(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizon"));
}

#[test]
fn certify_chain_of_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cert.json");
    let o = run(&["certify", "--config", p(&ex1_config()), "--window", "3", "--threshold", "0.5", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["graph_length"], 2);
    assert_eq!(doc["reachable_node"], 1);
    // 1 - C = (1/2) (1/3)^2 exp(-12)
    let expected = 0.5 / 9.0 * (-12.0f64).exp();
    let gap = doc["certificate"]["one_minus_contraction"].as_f64().unwrap();
    assert!((gap / expected - 1.0).abs() < 1e-12);
    assert!((gap - 3.4134e-7).abs() < 1e-11);
}

fn write_config(dir: &Path, entries: &str) -> PathBuf {
    let cfg = dir.join("cfg.json");
    let text = format!(
        r#"{{"system": {{"family": "first_order_linear", "n_agents": 3, "dim": 1}},
            "schedule": {{"inline": {{"n_agents": 3, "entries": [{entries}]}}}},
            "horizon": 1.0}}"#
    );
    std::fs::write(&cfg, text).unwrap();
    cfg
}

#[test]
fn complete_constant_schedule_certifies_with_one_hop() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = [(1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)];
    let entries: Vec<String> = pairs.iter().map(|(i, j)| format!(r#"{{"i": {i}, "j": {j}, "default": 1.0}}"#)).collect();
    let cfg = write_config(dir.path(), &entries.join(","));
    let out = dir.path().join("pe.json");
    let o = run(&["certify", "--config", p(&cfg), "--T", "1", "--mu", "0.5", "--condition", "pe", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["certificate"]["graph_length"], 1);
}

#[test]
fn silent_schedule_is_unsatisfied() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let o = run(&["certify", "--config", p(&cfg), "--window", "1", "--threshold", "0.5"]);
    assert_eq!(code(&o), 4);
    let evidence: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(evidence["persistent_graph"].is_object());
}

#[test]
fn table1_reports_truncated_rows_as_golden_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t1.csv");
    let o = run(&["table1", "--csv", p(&csv)]);
    // The embedded table truncates three entries that round differently.
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("[5, 8, 9]"));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 9);
}

#[test]
fn example2_small_chain_flocks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex2");
    let o = run(&["example2", "--n", "4", "--out-dir", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("flocking"));
    for f in ["trajectory.csv", "verdict.json", "positions.svg", "diameters.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn barrier_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let junit = dir.path().join("junit.xml");
    let o = run(&["check", "--suite", "barriers", "--cases", "200", "--seed", "7", "--junit", p(&junit)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(std::fs::read_to_string(&junit).unwrap().contains("<testsuite"));
}

#[test]
fn generated_schedule_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let sched = dir.path().join("sched.json");
    let o = run(&["gen", "--n", "5", "--window", "2", "--threshold", "0.3", "--seed", "3", "--out", p(&sched)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"system": {"family": "first_order_linear", "n_agents": 5, "dim": 2},
            "schedule": {"path": "sched.json"}, "horizon": 4.0}"#,
    )
    .unwrap();
    let o = run(&["certify", "--config", p(&cfg), "--window", "2", "--threshold", "0.3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}
