use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

/// Runs `qk` from the examples directory and returns the exit code and report.
fn qk(args: &[&str]) -> (i32, Value, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_qk"))
        .args(args)
        .arg("--json-only")
        .current_dir(examples())
        .output()
        .expect("qk runs");
    let report = serde_json::from_slice(&out.stdout).expect("stdout is a JSON report");
    (out.status.code().expect("exit code"), report, out.stdout)
}

#[test]
fn validate_pair_groupoid() {
    let (code, r, _) = qk(&["validate", "pair2.json"]);
    assert_eq!(code, 0);
    assert_eq!(r["status"], "pass");
    assert_eq!(r["result"]["arrows"], 4);
    assert_eq!(r["inputs"][0]["path"], "pair2.json");
    assert_eq!(r["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn morita_pair_and_point() {
    let (code, r, _) = qk(&["morita", "pair2.json", "point.json", "--bound", "4"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["verdict"]["equivalent"], true);
    assert_eq!(r["result"]["verdict"]["oracle_agrees"], true);
    assert_eq!(r["result"]["witness"]["carrier"].as_array().unwrap().len(), 2);
}

#[test]
fn morita_group_and_point_are_not_equivalent() {
    let (code, r, _) = qk(&["morita", "z2.json", "point.json", "--bound", "6"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["verdict"]["equivalent"], false);
    assert!(r["result"]["verdict"]["certificate"]["InvariantMismatch"].is_object());
}

#[test]
fn morita_oracle_only_skips_the_search() {
    let (code, r, _) = qk(&["morita", "pair2.json", "point.json", "--oracle-only"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["oracle"], true);
    assert!(r["result"].get("verdict").is_none());
}

#[test]
fn too_small_a_bound_is_inconclusive() {
    let (code, r, _) = qk(&["morita", "pair2.json", "point.json", "--bound", "1"]);
    assert_eq!(code, 3);
    assert_eq!(r["status"], "inconclusive");
    assert_eq!(r["errors"][0]["kind"], "Inconclusive");
}

#[test]
fn inner_product_of_the_two_points() {
    let (code, r, _) = qk(&["inner", "pair2.json", "taut.json", "--x", "{1}", "--y", "{2}"]);
    assert_eq!(code, 0);
    for formula in ["fast", "oracle", "basis"] {
        assert_eq!(r["result"][formula], "{(1,2)}");
    }
    let (_, r, _) = qk(&["inner", "pair2.json", "taut.json", "--x", "1", "--y", "0"]);
    assert_eq!(r["result"]["fast"], "{}");
}

#[test]
fn sheaf_and_quantale_reports() {
    let (code, r, _) = qk(&["sheaf", "pair2.json", "taut.json"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["principally_covered"], true);
    let (code, r, _) = qk(&["quantale", "z2.json", "--dump"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["elements"], 4);
    assert_eq!(r["result"]["dump"]["partial_units"].as_array().unwrap().len(), 3);
}

#[test]
fn bisheaf_and_composition() {
    let (code, r, _) = qk(&["bisheaf", "taut-bi.json"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["biprincipality"]["biprincipal"], true);
    let (code, r, _) = qk(&["hs-compose", "taut-bi.json", "taut-dual.json"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["points"], 4);
    let (code, r, _) = qk(&["hs-compose", "taut-bi.json", "taut-bi.json"]);
    assert_eq!(code, 2);
    assert_eq!(r["errors"][0]["kind"], "QuantaleMismatch");
}

#[test]
fn functor_bundle_of_a_non_equivalence() {
    let (code, r, _) = qk(&["functor-bundle", "point-to-z2.json"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["hs_invertible"], false);
    assert_eq!(r["result"]["essential_equivalence"]["fully_faithful"], false);
}

#[test]
fn composite_dump_is_readable_input() {
    let (_, r, _) = qk(&["hs-compose", "taut-bi.json", "taut-dual.json"]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("composite.json");
    std::fs::write(&path, serde_json::to_string(&r["result"]["composite"]).unwrap()).unwrap();
    let (code, r, _) = qk(&["bisheaf", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["biprincipality"]["biprincipal"], true);
}

#[test]
fn parse_errors_carry_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\n  \"objects\": [\"a\",\n}").unwrap();
    let (code, r, _) = qk(&["validate", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(r["errors"][0]["kind"], "parse");
    assert!(r["errors"][0]["message"].as_str().unwrap().contains(":3:"));
}

#[test]
fn unknown_names_are_field_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    std::fs::write(&path, r#"{"objects":["a"],"arrows":[{"id":"i","dom":"a","cod":"b"}],"comp":[],"inv":[],"ids":[]}"#)
        .unwrap();
    let (code, r, _) = qk(&["validate", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(r["errors"][0]["kind"], "field");
    assert!(r["errors"][0]["message"].as_str().unwrap().contains("arrows[0]"));
}

#[test]
fn axiom_violations_fail_validation() {
    // `a∘a` is left undefined although `a` is an endo-arrow.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    std::fs::write(
        &path,
        r#"{"objects":["x"],
            "arrows":[{"id":"e","dom":"x","cod":"x"},{"id":"a","dom":"x","cod":"x"}],
            "comp":[["e","e","e"],["e","a","a"],["a","e","a"]],
            "inv":[["e","e"],["a","a"]],
            "ids":[["x","e"]]}"#,
    )
    .unwrap();
    let (code, r, _) = qk(&["validate", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(r["status"], "fail");
    assert!(!r["result"]["violations"].as_array().unwrap().is_empty());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = ["morita", "pair2.json", "point.json", "--bound", "4"];
    assert_eq!(qk(&args).2, qk(&args).2);
    let args = ["catalog", "--max-objects", "1", "--suite", "morita-decision"];
    let (code, _, first) = qk(&args);
    assert_eq!(code, 0);
    assert_eq!(first, qk(&args).2);
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let (code, r, _) = qk(&["catalog", "--suite", "nonsense"]);
    assert_eq!(code, 2);
    assert_eq!(r["errors"][0]["kind"], "usage");
}
