use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn twosided(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twosided")).current_dir(dir).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

/// Summary-mode rows of a successful command.
fn summary(dir: &Path, args: &[&str]) -> Vec<Value> {
    let mut full = args.to_vec();
    full.extend(["--format", "summary"]);
    let out = twosided(dir, &full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    v["rows"].as_array().unwrap().clone()
}

const UNIT: &str = r#"{"n":1,"m":1,"u":[[1.0]],"w":[[1.0]],"r":[[1.0]]}"#;
const ZERO: &str = r#"{"n":2,"m":1,"u":[[1.0],[2.0]],"w":[[1.0,1.0]],"r":[[0.0],[0.0]]}"#;

#[test]
fn gen_writes_valid_instances() {
    let dir = tempfile::tempdir().unwrap();
    let out = twosided(dir.path(), &["gen", "same-order-additive", "3", "2", "--seed", "7", "--out", "a.json"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("a.json")).unwrap();
    let inst = twosided::Instance::from_json(&text).unwrap();
    assert!(inst.detect_same_order().is_some());
    assert_eq!((inst.n(), inst.m()), (3, 2));

    twosided(dir.path(), &["gen", "uniform-random", "4", "3", "--seed", "1", "--out", "b.json"]);
    let text = std::fs::read_to_string(dir.path().join("b.json")).unwrap();
    assert!(twosided::Instance::from_json(&text).unwrap().validate().is_ok());
}

#[test]
fn solve_reports_known_values() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "unit.json", UNIT);
    write(dir.path(), "zero.json", ZERO);
    let row = &summary(dir.path(), &["solve", "unit.json"])[0];
    assert!(row["objective"].as_f64().unwrap() >= 0.25 - 1e-6);
    assert_eq!(row["exact"].as_f64(), Some(0.25));
    let row = &summary(dir.path(), &["solve", "zero.json"])[0];
    assert_eq!(row["objective"].as_f64(), Some(0.0));
    assert!(row["ratio"].is_null());

    twosided(dir.path(), &["gen", "uniform-random", "3", "2", "--seed", "11", "--out", "r.json"]);
    let row = &summary(dir.path(), &["solve", "r.json", "--delta", "0", "--dump-lp", "lp.json", "--solution", "s.json"])[0];
    assert!(row["ratio"].as_f64().unwrap() >= 1.0 - 1e-4);
    let lp: twosided::simplex::LpProblem =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("lp.json")).unwrap()).unwrap();
    let sol: twosided::lp::LpSolution =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(sol.x.len(), 3);
    assert!(lp.num_vars >= 6);
}

#[test]
fn run_policies() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "unit.json", UNIT);
    let row = &summary(dir.path(), &["run", "unit.json", "--policy", "dp", "--seed", "0"])[0];
    assert_eq!(row["exact"].as_f64(), Some(0.25));

    twosided(dir.path(), &["gen", "same-order-multiplicative", "3", "3", "--seed", "4", "--out", "so.json"]);
    let row = &summary(dir.path(), &["run", "so.json", "--policy", "greedy", "--seed", "1", "--trials", "500"])[0];
    assert!(row["ratio_vs_dp"].as_f64().unwrap() >= 0.5);
    let row = &summary(dir.path(), &["run", "so.json", "--policy", "rand-static", "--seed", "1", "--trials", "500"])[0];
    assert!(row["exact"].as_f64().unwrap() >= 0.5 * row["lp_objective"].as_f64().unwrap() - 1e-9);
    assert_eq!(row["trials"].as_u64(), Some(500));
}

#[test]
fn rows_format_has_config_header() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "unit.json", UNIT);
    let out = twosided(dir.path(), &["run", "unit.json", "--policy", "star", "--seed", "9"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# twosided run");
    assert!(lines.contains(&"# seed=9"));
    assert!(lines.contains(&"# policy=star"));
    let header = lines.iter().position(|l| !l.starts_with('#')).unwrap();
    assert!(lines[header].starts_with("policy,exact,"));
    assert!(lines[header + 1].starts_with("star,0.25,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "unit.json", UNIT);
    write(dir.path(), "bad.json", r#"{"n":1}"#);
    let code = |args: &[&str]| twosided(dir.path(), args).status.code();

    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&[]), Some(1));
    assert_eq!(code(&["gen", "nope", "1", "1", "--seed", "1", "--out", "x.json"]), Some(1));
    assert_eq!(code(&["run", "unit.json", "--policy", "dp"]), Some(1), "seed is mandatory");
    assert_eq!(code(&["solve", "bad.json"]), Some(1));
    assert_eq!(code(&["solve", "missing.json"]), Some(1));
    assert_eq!(code(&["solve", "unit.json", "--delta", "1.5"]), Some(1));

    twosided(dir.path(), &["gen", "uniform-random", "6", "3", "--seed", "9", "--out", "big.json"]);
    assert_eq!(code(&["run", "big.json", "--policy", "dp", "--seed", "1"]), Some(3));
    assert_eq!(code(&["run", "big.json", "--policy", "greedy", "--seed", "1"]), Some(3));

    assert_eq!(code(&["verify", "--suite", "appendix-a", "--seed", "1"]), Some(0));
}

#[test]
fn verify_reproduces_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let rows = summary(dir.path(), &["verify", "--suite", "appendix-a", "--seed", "0"]);
    assert!(rows.iter().all(|r| r["status"] == "PASS"));
    let witness = rows.iter().find(|r| r["check"] == "submodular order 2 1 0 (negative control)").unwrap();
    assert!(witness["witness"].as_str().unwrap().starts_with("A={2} B={1 2} C={0}"));
}
