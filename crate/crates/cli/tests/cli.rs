use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn dsg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dsg"))
}

fn fixtures_dir() -> TempDir {
    let dir = TempDir::new().unwrap();
    let out = dsg().args(["fixtures", "--out-dir"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

fn fixture(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(format!("{name}.json"))
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn run(args: &[&str], input: &Path) -> (Value, i32) {
    let out = dsg().args(&args[..1]).arg(input).args(&args[1..]).output().unwrap();
    (report(&out), out.status.code().unwrap())
}

#[test]
fn fixtures_are_written() {
    let dir = fixtures_dir();
    let count = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(count, 9);
}

#[test]
fn counterexample_validates() {
    let dir = fixtures_dir();
    let (r, code) = run(&["validate"], &fixture(&dir, "counterexample"));
    assert_eq!(code, 0);
    assert_eq!(r["result"]["valid"], true);
    assert_eq!(r["result"]["violations"], Value::Array(vec![]));
    assert_eq!(r["result"]["states"], 7);
}

#[test]
fn positive_game_is_primitive_at_length_one() {
    let dir = fixtures_dir();
    let (r, code) = run(&["check", "--kind", "primitive"], &fixture(&dir, "two-signal"));
    assert_eq!(code, 0);
    assert_eq!(r["result"]["holds"], true);
    assert_eq!(r["result"]["m_star"], 1);
}

#[test]
fn failed_check_exits_one() {
    let dir = fixtures_dir();
    let (r, code) = run(&["check", "--kind", "ergodic"], &fixture(&dir, "counterexample"));
    assert_eq!(code, 1);
    assert_eq!(r["exit_code"], 1);
}

#[test]
fn pipeline_matches_direct_solve_on_revealing_game() {
    let dir = fixtures_dir();
    let input = fixture(&dir, "revealing-chain");
    let (p, code) = run(&["pipeline", "--epsilon", "0.5", "--eta-override", "4"], &input);
    assert_eq!(code, 0);
    let (d, _) = run(&["solve-uniform"], &input);
    let (pv, dv) = (p["result"]["value"].as_f64().unwrap(), d["result"]["value"].as_f64().unwrap());
    assert!((pv - dv).abs() <= 1e-6, "{pv} vs {dv}");
    assert_eq!(p["result"]["eta_overridden"], true);
    assert_eq!(p["result"]["error_bound"], Value::Null);
}

#[test]
fn certified_pipeline_reports_bound() {
    let dir = fixtures_dir();
    let (r, code) = run(&["pipeline", "--epsilon", "0.5"], &fixture(&dir, "constant"));
    assert_eq!(code, 0);
    assert!((r["result"]["value"].as_f64().unwrap() - 0.3).abs() <= 1e-6);
    assert!(r["result"]["error_bound"].as_f64().is_some());
}

#[test]
fn state_cap_exits_two() {
    let dir = fixtures_dir();
    let out = dsg()
        .env("DSG_STATE_CAP", "1")
        .arg("pipeline")
        .arg(fixture(&dir, "two-signal"))
        .args(["--epsilon", "0.5", "--eta-override", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert!(r["error"].as_str().unwrap().contains("cap"));
    assert_eq!(r["config"]["state_cap"], 1);
}

#[test]
fn parse_errors_carry_location() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"states\": [\"a\"],\n  oops\n}").unwrap();
    let (r, code) = run(&["validate"], &bad);
    assert_eq!(code, 1);
    assert!(r["error"].as_str().unwrap().contains("line 3"), "{}", r["error"]);

    let unknown = dir.path().join("unknown.json");
    std::fs::write(
        &unknown,
        r#"{"states": ["a"], "actions1": ["x"], "actions2": ["y"], "signals": ["s"],
            "transitions": [{"from": "a", "a1": "x", "a2": "y", "to": "b", "signal": "s", "prob": 1.0}],
            "initial_belief": [{"state": "a", "prob": 1.0}]}"#,
    )
    .unwrap();
    let (r, code) = run(&["validate"], &unknown);
    assert_eq!(code, 1);
    assert!(r["error"].as_str().unwrap().contains("transitions[0].to"), "{}", r["error"]);
}

#[test]
fn usage_errors_exit_one() {
    let out = dsg().args(["pipeline", "missing.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_file_holds_full_report() {
    let dir = fixtures_dir();
    let target = dir.path().join("out").with_extension("json");
    let out = dsg()
        .args(["--seed", "7", "--output"])
        .arg(&target)
        .arg("certificate")
        .arg(fixture(&dir, "blind-primitive"))
        .args(["--epsilon", "0.25"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(r["seed"], 7);
    assert_eq!(r["command"]["command"], "certificate");
    assert_eq!(r["result"]["certificate"]["m_eps"], 4);
    // No temporary files are left next to the report.
    let leftovers = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with(".tmp"))
        .count();
    assert_eq!(leftovers, 0);
}

#[test]
fn coupling_is_seed_reproducible() {
    let dir = fixtures_dir();
    let input = fixture(&dir, "coupling-primitive");
    let args = ["simulate-coupling", "--epsilon", "0.2", "--eta", "8", "--m-eps", "2", "--episodes", "500", "--blocks", "2"];
    let (a, code) = run(&args, &input);
    assert_eq!(code, 0, "{a}");
    let (b, _) = run(&args, &input);
    assert_eq!(a, b);
    assert!(a["result"]["coupling"]["mean_gap"].is_number());
}
