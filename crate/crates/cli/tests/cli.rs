use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ppot(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppot")).args(args).current_dir(dir).output().expect("spawn ppot")
}

fn carpet_graph(dir: &Path) {
    let out = ppot(&["build-graph", "--kind", "carpet", "--level", "3", "--epsilon", "0.037037", "--out", "g.json"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

#[test]
fn build_graph_carpet_level_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = ppot(&["build-graph", "--kind", "carpet", "--level", "3", "--epsilon", "0.037037", "--out", "g.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["vertices"], 512);
    assert!(dir.path().join("g.json").exists());
}

#[test]
fn capacity_is_positive() {
    let dir = tempfile::tempdir().unwrap();
    carpet_graph(dir.path());
    let out = ppot(&["capacity", "--graph", "g.json", "--r", "0.2", "--p", "1.5"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(report(&out)["result"]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    carpet_graph(dir.path());
    let args = ["harnack", "--graph", "g.json", "--r", "0.1", "--trials", "4", "--policy", "any", "--p", "3"];
    let first = ppot(&args, dir.path());
    let second = ppot(&args, dir.path());
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn config_file_and_flags_agree() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "p = 2.0\n[space]\nkind = \"carpet\"\nlevel = 3\n[net]\nepsilon = 0.037037\n").unwrap();
    carpet_graph(dir.path());
    let from_file = ppot(&["capacity", "--graph", "g.json", "--r", "0.2"], dir.path());
    let from_config = ppot(&["capacity", "--config", "run.toml", "--r", "0.2"], dir.path());
    assert_eq!(report(&from_file)["result"], report(&from_config)["result"]);
    assert_ne!(report(&from_file)["config_hash"], report(&from_config)["config_hash"]);
}

#[test]
fn scaling_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    carpet_graph(dir.path());
    let out = ppot(
        &["scaling-sweep", "--graph", "g.json", "--radii", "0.05,0.1,0.2,0.4", "--policy", "any", "--csv", "sweep.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("r,cap"));
}

#[test]
fn failed_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    carpet_graph(dir.path());
    let out = ppot(&["llc", "--graph", "g.json", "--r", "0.1", "--expect", "false"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["assertions"]["matches_expectation"], false);
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ppot(&["capacity", "--bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(ppot(&["capacity", "--graph", "missing.json", "--r", "1"], dir.path()).status.code(), Some(2));
    let out = ppot(&["build-graph", "--kind", "carpet", "--level", "2", "--epsilon", "0.1", "--out", "no/such/dir/g.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(dir.path().join("bad.toml"), "unknown_key = 1\n").unwrap();
    assert_eq!(ppot(&["verify-all", "--config", "bad.toml"], dir.path()).status.code(), Some(2));
}

#[test]
fn verify_all_subset_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ppot(&["verify-all", "--only", "1,3,4"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["assertions"].as_object().unwrap().len(), 3);
}
