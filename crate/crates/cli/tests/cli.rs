//! End-to-end runs of the `fatpoint` binary.

use std::path::Path;
use std::process::{Command, Output};

fn fatpoint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fatpoint")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const HEADER: &str = "d,m,n,virtual,expected_vec,oracle_vec,status,cert_method,wall_time_ms,error";

#[test]
fn dim_reports_both_conventions() {
    let o = fatpoint(&["dim", "2", "2", "2"]);
    assert_eq!(code(&o), 2);
    let out = stdout(&o);
    assert!(out.contains("-1 (projective), 0 (vector space)"), "{out}");
    assert!(out.contains("0 (projective), 1 (vector space)"), "{out}");
    assert!(out.contains("ProbablySpecial(1)"));

    let o = fatpoint(&["dim", "8", "1", "16", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["actual_vec"], 29);
    assert_eq!(v["expected_vec"], 29);
    assert_eq!(v["expected_projective"], 28);

    let o = fatpoint(&["dim", "3", "1", "0", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["actual_vec"], 10);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&fatpoint(&["dim", "2", "2", "2", "--prime", "15"])), 1);
    assert_eq!(code(&fatpoint(&["dim", "2", "2"])), 1);
    assert_eq!(code(&fatpoint(&["dim", "2", "2", "2", "--seed", "abc"])), 1);
    assert_eq!(code(&fatpoint(&["certify", "8", "1", "16", "--factor", "3", "5"])), 4);
    assert_eq!(code(&fatpoint(&["frobnicate"])), 1);
    assert_eq!(code(&fatpoint(&["--help"])), 0);
}

#[test]
fn certify_writes_a_verifiable_document() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let o = fatpoint(&["certify", "4", "1", "16", "--factor", "4", "4", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("L_4(1^16) = 0: degeneration 4x4, k=2, case A, dim_L0=0"));
    let cert = fatpoint::certify::Certificate::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(fatpoint::certify::verify_certificate(&cert));

    let o = fatpoint(&["certify", "10", "2", "16", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((v["version"].as_str(), v["k"].as_i64(), v["dim_L0"].as_u64()), (Some("cert-v1"), Some(4), Some(18)));
}

#[test]
fn certify_failure_names_the_system() {
    let o = fatpoint(&["certify", "5", "2", "7", "--trials", "0"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("L_5(2^7)"));
    let o = fatpoint(&["certify", "5", "2", "7"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("oracle witness"));
}

#[test]
fn sweep_csv_is_stable() {
    let args = ["sweep", "--d", "0:12", "--m", "1:2", "--n", "2,4,9,16", "--format", "csv", "--no-timing"];
    let a = fatpoint(&args);
    let b = fatpoint(&[&args[..], &["--sequential"]].concat());
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 13 * 2 * 4);
    assert!(rows[0].starts_with("0,1,2,"));
    assert!(rows[1].starts_with("0,1,4,"));
    assert!(rows.contains(&"2,2,2,-1,0,1,ProbablySpecial(1),,0,"));
}

#[test]
fn sweep_edge_cases() {
    let o = fatpoint(&["sweep", "--d", "5:1", "--m", "1", "--n", "4", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), format!("{HEADER}\n"));

    let o = fatpoint(&["sweep", "--d", "0:10", "--m", "1:2", "--family", "4^2", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.len(), 22);
    assert!(rows.iter().all(|r| r["status"] == "NonSpecialCertified" && r["n"] == 16));
}

#[test]
fn cache_persists_between_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let c = cache.to_str().unwrap();
    assert_eq!(code(&fatpoint(&["certify", "10", "2", "16", "--cache", c])), 0);
    assert_eq!(code(&fatpoint(&["dim", "2", "2", "2", "--cache", c])), 2);
    let text = std::fs::read_to_string(&cache).unwrap();
    assert!(text.starts_with(r#"{"store":"fatpoint-cache","version":1}"#));
    let store = fatpoint::store::ResultStore::load_strict(Path::new(&cache)).unwrap();
    assert!(store.len() >= 5);

    // a damaged line is reported and skipped, the run still succeeds
    std::fs::write(&cache, text + "{not json\n").unwrap();
    let o = fatpoint(&["certify", "10", "2", "16", "--cache", c]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed"));
}

#[test]
fn selftest_and_negative_control() {
    let o = fatpoint(&["selftest", "--quick"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = fatpoint(&["selftest", "--quick", "--inject-image-sign-flip"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("selftest failed: image-intersection cross-check"));
}
