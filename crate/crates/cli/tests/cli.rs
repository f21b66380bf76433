use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lattice-approx"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn error_of(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let line = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(line.trim()).expect("error record is JSON")
}

#[test]
fn zero_samples_are_rejected() {
    let out = run(&[
        "count",
        "--f",
        "prod:n=2",
        "--psi",
        "pl:C=1,s=1,j=0",
        "--t",
        "8",
        "--samples",
        "0",
    ]);
    let err = error_of(&out);
    assert_eq!(err["error"]["kind"], "invalid_value");
    assert!(err["error"]["message"].as_str().unwrap().contains("`samples`"));
}

#[test]
fn missing_dimension_is_named() {
    let err = error_of(&run(&["siegel", "--volumes", "10", "--samples", "5"]));
    assert_eq!(err["error"]["kind"], "missing_key");
    assert!(err["error"]["message"].as_str().unwrap().contains("`n`"));
}

#[test]
fn exponent_below_one_is_rejected() {
    let err = error_of(&run(&[
        "volume",
        "--f",
        "spf:p=2,q=1,d=2",
        "--d",
        "0.5",
        "--psi",
        "pl:C=1,s=1,j=0",
        "--t",
        "5",
    ]));
    assert!(err["error"]["message"].as_str().unwrap().contains("`d`"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "n = 2\nvolumez = [1.0]\n").unwrap();
    let err = error_of(&run(&["siegel", "--config", cfg.to_str().unwrap()]));
    assert!(err["error"]["message"].as_str().unwrap().contains("volumez"));
}

#[test]
fn volume_matrix_has_nine_rows() {
    let out = run(&["volume", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().unwrap().clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["family", "params", "S", "T", "value", "error", "method"]
    );
    let rows: Vec<_> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 9);
    for family in ["signed_power", "product"] {
        assert_eq!(rows.iter().filter(|r| &r[0] == family).count(), 3);
    }
    assert!(rows.iter().all(|r| r[4].parse::<f64>().unwrap() > 0.0));
}

fn digests(dir: &Path) -> Value {
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    manifest["outputs"].clone()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let args = |dir: &Path, workers: &'static str| {
        vec![
            "count".to_string(),
            "--f=spf:p=2,q=1,d=2".into(),
            "--psi=pl:C=1,s=0.5,j=0".into(),
            "--t=16".into(),
            "--samples=6".into(),
            "--seed=11".into(),
            format!("--workers={workers}"),
            format!("--out={}", dir.display()),
        ]
    };
    for (dir, workers) in dirs.iter().zip(["1", "3"]) {
        let a = args(dir.path(), workers);
        let out = run(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("count.jsonl")).unwrap();
    assert_eq!(read(&dirs[0]), read(&dirs[1]));
    assert_eq!(digests(dirs[0].path()), digests(dirs[1].path()));
    let text = String::from_utf8(read(&dirs[0])).unwrap();
    for (i, line) in text.lines().enumerate() {
        let rec: Value = serde_json::from_str(line).unwrap();
        assert_eq!(rec["master_seed"], 11);
        assert_eq!(rec["sample"], i as u64);
    }
}

#[test]
fn manifest_records_config_and_digests() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "n = 2\nvolumes = [8.0]\nsamples = 10\nseed = 3\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "siegel",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "12",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["samples"], 12);
    assert_eq!(manifest["config"]["n"], 2);
    assert_eq!(manifest["master_seed"], 3);
    let jsonl = std::fs::read(out_dir.join("siegel.jsonl")).unwrap();
    assert_eq!(
        manifest["outputs"]["siegel.jsonl"],
        lattice_approx_cli::output::sha256_hex(&jsonl)
    );
    assert_eq!(String::from_utf8(jsonl).unwrap().lines().count(), 12);
}

#[test]
fn count_with_a_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("g.txt");
    std::fs::write(&m, "1 0\n0 1\n").unwrap();
    let out = run(&[
        "count",
        "--f",
        "prod:n=2",
        "--epsilon",
        "0",
        "--t",
        "5",
        "--point-class",
        "nonzero",
        "--matrix-file",
        m.to_str().unwrap(),
        "--format",
        "jsonl",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rec: Value = serde_json::from_str(String::from_utf8(out.stdout).unwrap().trim()).unwrap();
    // The axes minus the origin: 4·5 points with ‖v‖∞ ≤ 5.
    assert_eq!(rec["count"], 20);
}

#[test]
fn classify_reports_the_regime() {
    for (psi, verdict) in [("pl:C=1,s=0,j=0", "diverges"), ("pl:C=1,s=1,j=0", "converges")] {
        let out = run(&["classify", "--f", "prod:n=2", "--psi", psi, "--format", "jsonl"]);
        assert!(out.status.success());
        let rec: Value = serde_json::from_str(String::from_utf8(out.stdout).unwrap().trim()).unwrap();
        assert_eq!(rec["verdict"], verdict, "{psi}");
    }
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest", "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!String::from_utf8(out.stdout).unwrap().contains("FAIL"));
}
