use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn treegrower(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treegrower"))
        .args(args)
        .env_remove("TREEGROWER_VERTEX_BUDGET")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_file_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("t1.txt");
    let out = treegrower(&["generate", "--steps", "1", "--out", path_str(&file)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "n=6 edges=5");
    assert_eq!(std::fs::read_to_string(&file).unwrap(), "0 2\n0 4\n1 3\n1 5\n2 3\n");
}

#[test]
fn generate_to_stdout_in_json() {
    let out = treegrower(&["generate", "--model", "phi-star", "--steps", "1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["n"], 6);
    assert_eq!(doc["edges"].as_array().unwrap().len(), 5);
    assert_eq!(doc["provenance"][2]["class"], "A");
    assert!(String::from_utf8_lossy(&out.stderr).contains("n=6 edges=5"));
}

#[test]
fn predict_csv_rows() {
    let out = treegrower(&["predict", "--steps", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "t,n,diameter,wiener,mean_hitting,mean_hitting_decimal\n\
         0,2,1,1,1,1.00000000000000\n\
         1,6,5,35,35/3,11.6666666666667\n\
         2,26,17,2025,2025/13,155.769230769231\n"
    );
}

#[test]
fn predict_json_for_phi_star_has_no_wiener_after_seed() {
    let out = treegrower(&["predict", "--model", "phi-star", "--steps", "2", "--format", "json"]);
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows[0]["wiener"], "1");
    assert_eq!(rows[2]["diameter"], "5");
    assert!(rows[2]["wiener"].is_null());
}

#[test]
fn analyze_matches_closed_forms() {
    let out = treegrower(&["analyze", "--steps", "3", "--seed", "path:3"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["closed_form_deltas"]["all_zero"], true);
    assert_eq!(doc["n"], 251);
}

#[test]
fn analyze_file_input_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("t.dot");
    assert_eq!(
        treegrower(&["generate", "--steps", "2", "--format", "dot", "--out", path_str(&file)]).status.code(),
        Some(0)
    );
    let out = treegrower(&["analyze", "--input", path_str(&file)]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["wiener"], "2025");
    assert!(doc["closed_form_deltas"].is_null());
}

#[test]
fn walk_reports_estimate_and_exact() {
    let out = treegrower(&["walk", "--steps", "1", "--pairs", "5000", "--walks", "4", "--rng-seed", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["exact"]["num"], "35");
    assert!(doc["z_score"].as_f64().unwrap().abs() < 4.0);
    let again = treegrower(&["walk", "--steps", "1", "--pairs", "5000", "--walks", "4", "--rng-seed", "9", "--workers", "2"]);
    let doc2: Value = serde_json::from_str(&stdout(&again)).unwrap();
    assert_eq!(doc["estimate"], doc2["estimate"]);
}

#[test]
fn walk_truncation_exits_5() {
    let out = treegrower(&["walk", "--steps", "2", "--source", "0", "--target", "1", "--walks", "10", "--step-cap", "3"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn scaling_csv_has_footer() {
    let out = treegrower(&["scaling", "--t-max", "3", "--monte-carlo-max", "1", "--pairs", "500"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("t,n,diameter,wiener,mean_hitting,"));
    assert!(text.contains("\n3,126,53,138875,2204.36507936508,126,53,138875,2204.36507936508,,,,,"));
    assert!(text.contains("# slope_log_h_vs_log_n,"));
}

#[test]
fn bad_seed_is_config_error() {
    assert_eq!(treegrower(&["generate", "--seed", "star:1"]).status.code(), Some(2));
    assert_eq!(treegrower(&["generate", "--seed", "file:/no/such/file"]).status.code(), Some(2));
    assert_eq!(treegrower(&["scaling", "--t-min", "4", "--t-max", "2"]).status.code(), Some(2));
}

#[test]
fn vertex_budget_exceeded_exits_3() {
    let out = Command::new(env!("CARGO_BIN_EXE_treegrower"))
        .args(["generate", "--steps", "4"])
        .env("TREEGROWER_VERTEX_BUDGET", "200")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
