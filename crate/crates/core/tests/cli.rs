use std::path::Path;
use std::process::Command;

use adec_core::codec::{self, EncodedBlock, HEADER_LEN};
use adec_core::harness::{self, ExperimentConfig};

const E1: &str = r#"{
    "k": 1, "eigenvalues": [1], "phi0": [[1, 0]],
    "r": [1], "eta": 6, "rho": [4, 2, 8],
    "delta": 0.25, "L": 8,
    "signal": {"kind": "explicit", "x": [[0.3, 0.2]]},
    "schemes": ["adapted"]
}"#;

fn adec() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adec"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn encode_then_decode_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e1.json", E1);
    let out = dir.path().join("block.adec");
    let status = adec().arg("encode").arg(&cfg).arg("-o").arg(&out).status().unwrap();
    assert!(status.success());

    let bytes = std::fs::read(&out).unwrap();
    assert_eq!(&bytes[..4], b"ADEC");
    assert_eq!(bytes[4], 1);
    assert_eq!(u32::from_le_bytes(bytes[5..9].try_into().unwrap()), 24);
    assert_eq!(u32::from_le_bytes(bytes[9..13].try_into().unwrap()), 4);
    assert_eq!(u32::from_le_bytes(bytes[13..17].try_into().unwrap()), 8);
    assert_eq!(bytes[17], 1);
    let width = bytes[18];
    assert_eq!(width, 11);
    assert_eq!(f64::from_le_bytes(bytes[19..27].try_into().unwrap()), 0.25);
    assert_eq!(bytes.len(), HEADER_LEN + (2 * 6 * width as usize).div_ceil(8));

    let block = EncodedBlock::from_bytes(&bytes).unwrap();
    let lib = codec::decode(&block).unwrap();
    let direct = harness::sweep::encode_first(&ExperimentConfig::from_json(E1).unwrap()).unwrap();
    assert_eq!(direct.to_bytes(), bytes);

    let output = adec().arg("decode").arg(&out).output().unwrap();
    assert!(output.status.success());
    let json: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(json["m"], 24);
    assert_eq!(json["width"], 11);
    let re: Vec<i128> = json["numerators_re"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().parse().unwrap())
        .collect();
    assert_eq!(re, lib.numerators_re);
}

#[test]
fn corrupted_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.adec");
    std::fs::write(&bad, b"XDEC\x01garbage").unwrap();
    let status = adec().arg("decode").arg(&bad).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn sweep_writes_ordered_csv_and_fit_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e1.json", E1);
    let csv = dir.path().join("out.csv");
    let svg = dir.path().join("plot.svg");
    let status = adec()
        .args(["sweep"])
        .arg(&cfg)
        .arg("-o")
        .arg(&csv)
        .arg("--svg")
        .arg(&svg)
        .status()
        .unwrap();
    assert!(status.success());
    let records = harness::sweep::read_csv_file(&csv).unwrap();
    let rhos: Vec<usize> = records.iter().map(|r| r.rho).collect();
    assert_eq!(rhos, vec![4, 2, 8]);
    assert!(records.iter().all(|r| r.is_ok() && r.err.unwrap() <= r.err_bound.unwrap()));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let text = std::fs::read_to_string(&csv).unwrap();
    let first_row = text.lines().nth(1).unwrap();
    // delta written with 17 significant digits
    assert!(first_row.contains("2.5000000000000000e-1"), "{first_row}");

    let output = adec().arg("fit").arg(&csv).output().unwrap();
    assert!(output.status.success());
    let fits: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(fits[0]["r"], 1);
    assert!(fits[0]["slope"].as_f64().unwrap() < 0.0);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", &E1.replace("\"k\": 1", "\"k\": 3"));
    let status = adec().arg("sweep").arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = adec().arg("sweep").arg(dir.path().join("missing.json")).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn verify_exit_codes() {
    let output = adec().args(["verify", "--level", "quick"]).output().unwrap();
    assert!(output.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(summary["checks"]["twist_scale"], true);

    let output = adec().args(["verify", "--level", "quick", "--flip-dbar"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let summary: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(summary["checks"]["twist_scale"], false);
}

#[test]
fn reconstruct_prints_each_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e1.json", E1);
    let output = adec().arg("reconstruct").arg(&cfg).output().unwrap();
    assert!(output.status.success());
    let recs: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let recs = recs.as_array().unwrap();
    assert_eq!(recs.len(), 3);
    assert!(recs.iter().all(|r| r["err"].as_f64().unwrap() < 0.1));
}
