//! Behavioural tests for the `ritzid` binary: formats, diagnostics, exit
//! codes, and report determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ritzid"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn generate_low_rank(dir: &TempDir, name: &str, rows: usize, cols: usize) -> PathBuf {
    let out = dir.path().join(name);
    let status = bin()
        .args([
            "generate",
            "low-rank",
            "--rows",
            &rows.to_string(),
            "--cols",
            &cols.to_string(),
            "--rank",
            "5",
            "--tail",
            "0.1",
            "--seed",
            "7",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    out
}

fn report_without_wall_time(raw: &[u8]) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(raw).expect("valid JSON report");
    v.as_object_mut().unwrap().remove("wall_time_ms");
    v
}

#[test]
fn estimate_report_has_the_contracted_fields() {
    let dir = TempDir::new().unwrap();
    let data = generate_low_rank(&dir, "d.csv", 60, 10);
    let out = run(&[
        "estimate",
        data.to_str().unwrap(),
        "--seed",
        "1",
        "--eps",
        "0.4",
        "--delta",
        "0.4",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in [
        "config",
        "data",
        "tau",
        "ritz_values",
        "intervals",
        "d_fractional",
        "d_rounded",
        "stop_reason",
        "seed",
        "wall_time_ms",
    ] {
        assert!(v.get(key).is_some(), "missing key {key}");
    }
    assert_eq!(v["config"]["tv"], 0.8);
    assert_eq!(v["seed"], 1);
}

#[test]
fn same_seed_gives_byte_identical_reports_modulo_wall_time() {
    let dir = TempDir::new().unwrap();
    let data = generate_low_rank(&dir, "d.csv", 80, 12);
    let args = [
        "estimate",
        data.to_str().unwrap(),
        "--seed",
        "9",
        "--eps",
        "0.4",
        "--delta",
        "0.4",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success() && b.status.success());
    let ja = report_without_wall_time(&a.stdout);
    let jb = report_without_wall_time(&b.stdout);
    assert_eq!(
        serde_json::to_string(&ja).unwrap(),
        serde_json::to_string(&jb).unwrap()
    );
}

#[test]
fn reports_round_trip_losslessly() {
    let dir = TempDir::new().unwrap();
    let data = generate_low_rank(&dir, "d.csv", 60, 10);
    let out = run(&[
        "estimate",
        data.to_str().unwrap(),
        "--eps",
        "0.5",
        "--delta",
        "0.5",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    // parse into an order-preserving mirror of the report and re-serialize:
    // shortest-roundtrip floats make the cycle an identity
    #[derive(serde::Serialize, serde::Deserialize)]
    struct Mirror {
        config: MirrorConfig,
        data: MirrorShape,
        tau: f64,
        n_probes: usize,
        ritz_values: Vec<f64>,
        intervals: Vec<MirrorInterval>,
        d_fractional: f64,
        d_rounded: u64,
        stop_reason: String,
        seed: u64,
        wall_time_ms: u64,
    }
    #[derive(serde::Serialize, serde::Deserialize)]
    struct MirrorConfig {
        input: String,
        tv: f64,
        ar: f64,
        p: usize,
        nk: usize,
        eps: f64,
        delta: f64,
        c1: f64,
        c2: f64,
        at: String,
        ft: String,
        clusters: usize,
        pre_centered: bool,
    }
    #[derive(serde::Serialize, serde::Deserialize)]
    struct MirrorShape {
        rows: usize,
        cols: usize,
    }
    #[derive(serde::Serialize, serde::Deserialize)]
    struct MirrorInterval {
        lower: f64,
        upper: f64,
        eta: f64,
        alpha_contrib: f64,
        cumulative_ratio: f64,
    }
    let parsed: Mirror = serde_json::from_str(&text).unwrap();
    let re = serde_json::to_string_pretty(&parsed).unwrap();
    assert_eq!(text.trim_end(), re);
}

#[test]
fn intervals_exhausted_exits_with_code_two() {
    let dir = TempDir::new().unwrap();
    let data = generate_low_rank(&dir, "d.csv", 60, 10);
    let out = run(&[
        "estimate",
        data.to_str().unwrap(),
        "--tv",
        "0.998",
        "--ar",
        "0.001",
        "--nk",
        "2",
        "--eps",
        "0.4",
        "--delta",
        "0.4",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["stop_reason"], "intervals_exhausted");
}

#[test]
fn malformed_csv_reports_line_and_column() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "bad.csv", "1.0,2.0\n3.0,oops\n");
    let out = run(&["estimate", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert_ne!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "stderr: {err}");
    assert!(err.contains("column 2"), "stderr: {err}");
}

#[test]
fn ragged_csv_reports_the_line() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "ragged.csv", "1.0,2.0\n3.0\n");
    let out = run(&["oracle", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "stderr: {err}");
    assert!(err.contains("expected 2 columns"), "stderr: {err}");
}

#[test]
fn header_row_is_auto_detected() {
    let dir = TempDir::new().unwrap();
    let with_header = write(&dir, "h.csv", "a,b\n1.0,2.0\n3.0,4.0\n5.0,6.0\n");
    let without = write(&dir, "n.csv", "1.0,2.0\n3.0,4.0\n5.0,6.0\n");
    let a = run(&["oracle", with_header.to_str().unwrap(), "--theta", "0.9"]);
    let b = run(&["oracle", without.to_str().unwrap(), "--theta", "0.9"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let va: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let vb: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(va["rows"], 3);
    assert_eq!(va["trace"], vb["trace"]);
}

#[test]
fn binary_round_trip_preserves_every_byte_of_data() {
    let dir = TempDir::new().unwrap();
    let csv = generate_low_rank(&dir, "d.csv", 50, 8);
    let bin_path = dir.path().join("d.bin");
    let status = bin()
        .args([
            "generate", "low-rank", "--rows", "50", "--cols", "8", "--rank", "5", "--tail", "0.1",
            "--seed", "7", "--out",
        ])
        .arg(&bin_path)
        .status()
        .unwrap();
    assert!(status.success());

    // identical generator output through either container: same oracle
    let a = run(&["oracle", csv.to_str().unwrap()]);
    let b = run(&["oracle", bin_path.to_str().unwrap()]);
    let va: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let vb: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    // binary is bit-exact; CSV goes through shortest-roundtrip decimal,
    // which is also lossless
    assert_eq!(va["eigenvalues"], vb["eigenvalues"]);

    // regenerating the binary gives an identical file
    let bin2 = dir.path().join("d2.bin");
    bin()
        .args([
            "generate", "low-rank", "--rows", "50", "--cols", "8", "--rank", "5", "--tail", "0.1",
            "--seed", "7", "--out",
        ])
        .arg(&bin2)
        .status()
        .unwrap();
    assert_eq!(
        std::fs::read(&bin_path).unwrap(),
        std::fs::read(&bin2).unwrap()
    );
}

#[test]
fn truncated_binary_is_diagnosed() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("t.bin");
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"RIDM");
    bytes.extend_from_slice(&1u16.to_le_bytes());
    bytes.extend_from_slice(&4u64.to_le_bytes());
    bytes.extend_from_slice(&2u64.to_le_bytes());
    bytes.extend_from_slice(&1.0f64.to_le_bytes()); // only 1 of 8 values
    std::fs::write(&path, bytes).unwrap();
    let out = run(&["oracle", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("truncated"), "stderr: {err}");
}

#[test]
fn clustered_estimate_reports_per_cluster_sections() {
    let dir = TempDir::new().unwrap();
    // two shifted copies of the same low-rank structure
    let base = generate_low_rank(&dir, "d.csv", 60, 6);
    let text = std::fs::read_to_string(&base).unwrap();
    let mut both = String::new();
    for line in text.lines() {
        let shifted: Vec<String> = line
            .split(',')
            .map(|v| format!("{}", v.parse::<f64>().unwrap() + 80.0))
            .collect();
        both.push_str(&shifted.join(","));
        both.push('\n');
    }
    for line in text.lines() {
        let shifted: Vec<String> = line
            .split(',')
            .map(|v| format!("{}", v.parse::<f64>().unwrap() - 80.0))
            .collect();
        both.push_str(&shifted.join(","));
        both.push('\n');
    }
    let data = write(&dir, "blobs.csv", &both);
    let out = run(&[
        "estimate",
        data.to_str().unwrap(),
        "--clusters",
        "2",
        "--eps",
        "0.4",
        "--delta",
        "0.4",
    ]);
    assert!(
        out.status.success() || out.status.code() == Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let clusters = v["per_cluster"].as_array().unwrap();
    assert_eq!(clusters.len(), 2);
    for c in clusters {
        assert!(c.get("d_fractional").is_some());
        assert!(c.get("rows").is_some());
    }
}

#[test]
fn exact_flag_attaches_the_oracle_section() {
    let dir = TempDir::new().unwrap();
    let data = generate_low_rank(&dir, "d.csv", 60, 10);
    let out = run(&[
        "estimate",
        data.to_str().unwrap(),
        "--exact",
        "--eps",
        "0.4",
        "--delta",
        "0.4",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["oracle"]["trace"].as_f64().unwrap() > 0.0);
    assert!(v["oracle"]["pca_id"].as_u64().unwrap() >= 1);
}

#[test]
fn bench_emits_one_row_per_configuration_per_repeat() {
    let dir = TempDir::new().unwrap();
    let data = generate_low_rank(&dir, "d.csv", 60, 10);
    let out = run(&[
        "bench",
        data.to_str().unwrap(),
        "--eps-list",
        "0.4,0.5",
        "--delta-list",
        "0.4",
        "--p-list",
        "10,15,20",
        "--nk-list",
        "4",
        "--repeats",
        "2",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.trim().lines().collect();
    // |eps| * |delta| * |p| * |nk| * repeats = 2 * 1 * 3 * 1 * 2
    let expected_rows = 12;
    assert_eq!(lines.len(), 1 + expected_rows);
    assert!(lines[0].starts_with("epsilon,delta,p,n_k,repeat,seed"));
}

#[test]
fn generate_normalizes_sphere_rows() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("s.csv");
    let status = bin()
        .args([
            "generate",
            "sphere",
            "--points",
            "40",
            "--manifold-dim",
            "1",
            "--ambient",
            "3",
            "--seed",
            "2",
            "--out",
        ])
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    for line in text.lines() {
        let norm_sq: f64 = line
            .split(',')
            .map(|v| v.parse::<f64>().unwrap().powi(2))
            .sum();
        assert!((norm_sq - 1.0).abs() < 1e-10);
    }
}

#[test]
fn missing_input_fails_cleanly() {
    let out = run(&["estimate", "/nonexistent/file.csv"]);
    assert!(!out.status.success());
    assert_ne!(out.status.code(), Some(2));
}
