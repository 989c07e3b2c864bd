//! Replays the checked-in fuzz seeds through the same checks as the fuzz targets.

use std::path::PathBuf;

use twosided::lp::LpSolution;
use twosided::simplex::{solve_lp, LpProblem, LpStatus};
use twosided::{GeneratorKind, Instance};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn instance_seeds() {
    let mut accepted = 0;
    for (name, data) in seeds("instance_json") {
        let Ok(inst) = Instance::from_json(std::str::from_utf8(&data).unwrap()) else { continue };
        accepted += 1;
        assert_eq!(Instance::from_json(&inst.to_json()).unwrap(), inst, "{name}");
        assert!(inst.normalize_revenues().max_revenue() <= 1.0, "{name}");
    }
    assert!(accepted >= 5);
}

#[test]
fn lp_seeds() {
    for (name, data) in seeds("lp_json") {
        let lp: LpProblem = serde_json::from_slice(&data).unwrap_or_else(|e| panic!("{name}: {e}"));
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal, "{name}");
        assert!(lp.evaluate(&out.x).1 <= 1e-8, "{name}");
    }
}

#[test]
fn solution_seeds() {
    for (name, data) in seeds("solution_json") {
        let sol: LpSolution = serde_json::from_slice(&data).unwrap_or_else(|e| panic!("{name}: {e}"));
        let inst = if name.starts_with("unit") { Instance::unit() } else { Instance::non_submodular_fixture() };
        assert!(sol.check(&inst, 1e-9).is_empty(), "{name}");
        assert!((sol.recompute_objective(&inst) - sol.objective).abs() <= 1e-9, "{name}");
    }
}

#[test]
fn generator_kind_seeds() {
    for (name, data) in seeds("generator_kind") {
        let text = String::from_utf8(data).unwrap();
        match text.parse::<GeneratorKind>() {
            Ok(kind) => assert_eq!(kind.name(), text),
            Err(_) => assert_eq!(name, "wrong_case"),
        }
    }
}
