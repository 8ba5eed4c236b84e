use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linkforge")).current_dir(dir).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

const SPHERE: &str = "dim 3\nbound 1.5\n1*e1*x1_1^2 + 1*e1*x1_2^2 + 1*e1*x1_3^2 - 1*e1 = 0\n";

#[test]
fn compile_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["compile", "--n", "3", "--expr", "1*e1*x1_1^2", "--domain-radius", "1", "--flavor", "cabled", "--out", "f.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = json(&out);
    assert_eq!(manifest["sheets"], 1);
    assert_eq!(manifest["census"]["inversion"], 3);
    assert!(dir.path().join("f.json").exists());

    let out = run(dir.path(), &["verify", "f.json", "--seed", "7", "--samples", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["pass"], true);
    assert!(report["max_output_error"].as_f64().unwrap() < 1e-6);

    let again = run(dir.path(), &["compile", "--n", "3", "--expr", "1*e1*x1_1^2", "--domain-radius", "1", "--flavor", "cabled", "--out", "g.json"]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("f.json")).unwrap(), fs::read(dir.path().join("g.json")).unwrap());
}

#[test]
fn classical_flavor_reports_sheets() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["compile", "--n", "3", "--expr", "1*e1*x1_1^2", "--flavor", "classical", "--out", "f.json"]);
    assert_eq!(out.status.code(), Some(0));
    let m = json(&out);
    assert!(m["sheet_bits"].as_u64().unwrap() > 0);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["verify", "f.json", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["verify", "missing.json"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["compile", "--n", "3", "--expr", "1*e9*x1_1"]).status.code(), Some(2));
    fs::write(dir.path().join("bad.json"), "{\n  \"format_version\": 1,\n  oops\n}").unwrap();
    let out = run(dir.path(), &["verify", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn tampered_document_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["compile", "--n", "3", "--expr", "1*e1*x1_1", "--out", "f.json"]).status.code(), Some(0));
    let mut doc: Value = serde_json::from_slice(&fs::read(dir.path().join("f.json")).unwrap()).unwrap();
    let len = doc["edges"][0]["length"].as_f64().unwrap();
    doc["edges"][0]["length"] = Value::from(len * 1.1);
    fs::write(dir.path().join("t.json"), serde_json::to_vec(&doc).unwrap()).unwrap();
    assert_ne!(run(dir.path(), &["verify", "t.json"]).status.code(), Some(0));
}

#[test]
fn trace_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["compile", "--n", "3", "--expr", "1*e1*x1_1^2", "--out", "f.json"]).status.code(), Some(0));
    let out = run(dir.path(), &["trace", "f.json", "--from", "0.1,0,0", "--to", "0.9,0,0", "--steps", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "y1_1,y1_2,y1_3");
    assert_eq!(lines.len(), 6);
    for (i, line) in lines[1..].iter().enumerate() {
        let x = 0.1 + 0.2 * i as f64;
        let y: f64 = line.split(',').next().unwrap().parse().unwrap();
        assert!((y - x * x).abs() < 1e-6, "{line}");
    }
    let out = run(dir.path(), &["trace", "f.json", "--from", "0.1,0,0", "--to", "0.9,0,0", "--steps", "4", "--format", "svg", "--out", "t.svg"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(fs::read_to_string(dir.path().join("t.svg")).unwrap().starts_with("<svg"));
    let out = run(dir.path(), &["trace", "f.json", "--from", "0.1,0,0", "--to", "0.9,0,0", "--format", "svg", "--plane", "0,7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn build_set_sample_and_solve() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.txt"), SPHERE).unwrap();
    let out = run(dir.path(), &["build-set", "s.txt", "--out", "s.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["sheets"], 1);
    let out = run(dir.path(), &["sample", "s.json", "--count", "3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let r: f64 = row.split(',').map(|c| c.parse::<f64>().unwrap().powi(2)).sum();
        assert!((r - 1.0).abs() < 1e-6, "{row}");
    }
    let out = run(dir.path(), &["solve", "s.json", "--input", "0,0.6,0.8"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(run(dir.path(), &["solve", "s.json", "--input", "0,0,0.5"]).status.code(), Some(1));

    fs::write(dir.path().join("bad.txt"), "dim 3\nbound 1\n1*e1*x1_1 < 0\n").unwrap();
    assert_eq!(run(dir.path(), &["build-set", "bad.txt"]).status.code(), Some(2));
}

#[test]
fn rigidify_a_triangle() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"vertices":[[0,0,0],[1,0,0],[0,1,0]],"pieces":[[0,1,2]]}"#).unwrap();
    let out = run(dir.path(), &["rigidify", "c.json", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(0));
    let s = json(&out);
    assert_eq!((s["vertices"].as_u64(), s["edges"].as_u64()), (Some(3), Some(3)));
    let out = run(dir.path(), &["verify", "r.json", "--samples", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
