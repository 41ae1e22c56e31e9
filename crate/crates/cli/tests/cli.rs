//! End-to-end checks of the batch driver: exit codes, artifact layout,
//! unknown-key rejection, and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hgconv"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("hgconv-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn selftest_passes_and_writes_manifest() {
    let dir = tmp_dir("selftest");
    let out = dir.join("out");
    let status = bin()
        .args(["group-selftest", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "pass");
    assert_eq!(manifest["command"], "group-selftest");
    assert!(out.join("group_selftest.csv").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn lemma6_single_row_smoke() {
    let dir = tmp_dir("lemma6");
    let out = dir.join("out");
    let status = bin()
        .args([
            "verify-lemma6",
            "--kmax",
            "0",
            "--nmax",
            "1",
            "--xi-count",
            "1",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("lemma6.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "header plus exactly one row");
    // F̂_{1,0}(0) = 2
    assert!(lines[1].starts_with("1,0,"));
    assert!(lines[1].contains("2.000000000000e0"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_config_key_is_a_usage_error_without_outputs() {
    let dir = tmp_dir("badkey");
    let cfg = write_config(&dir, r#"{"definitely_not_a_key": 1}"#);
    let out = dir.join("out");
    let output = bin()
        .args(["scaling", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("unknown config key"));
    assert!(!out.join("scaling.csv").exists());
    assert!(!out.join("manifest.json").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unresolvable_ladder_is_a_usage_error() {
    let dir = tmp_dir("lowres");
    let cfg = write_config(&dir, r#"{"ladder.cells_per_delta": 2}"#);
    let output = bin()
        .args(["scaling", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("4 grid cells"));
    std::fs::remove_dir_all(&dir).ok();
}

const QUICK_SCALING: &str = r#"{
    "ladder.deltas": [0.25, 0.125, 0.0625],
    "scaling.x_samples": 9,
    "scaling.t_samples": 4,
    "quad.nodes_per_axis": 8,
    "quad.interp": "linear"
}"#;

#[test]
fn scaling_reruns_are_byte_identical() {
    let dir = tmp_dir("determinism");
    let cfg = write_config(&dir, QUICK_SCALING);
    let (out1, out2) = (dir.join("a"), dir.join("b"));
    for out in [&out1, &out2] {
        let status = bin()
            .args(["scaling", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(out1.join("scaling.csv")).unwrap();
    let b = std::fs::read(out2.join("scaling.csv")).unwrap();
    assert_eq!(a, b, "reruns with the same config must be byte-identical");
    let a = std::fs::read(out1.join("scaling_dual.csv")).unwrap();
    let b = std::fs::read(out2.join("scaling_dual.csv")).unwrap();
    assert_eq!(a, b);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn scan_grid_has_membership_columns() {
    let dir = tmp_dir("scan");
    let cfg = write_config(
        &dir,
        r#"{
        "ladder.deltas": [0.25, 0.125, 0.0625],
        "scaling.x_samples": 9,
        "scaling.t_samples": 4,
        "quad.nodes_per_axis": 8,
        "quad.interp": "linear",
        "scan.axis_points": 3,
        "scan.with_norms": false
    }"#,
    );
    let out = dir.join("out");
    let status = bin()
        .args(["scan", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("scan.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 10, "header + 3×3 grid");
    assert_eq!(
        lines[0],
        "ip,iq,fitted,predicted,norm_lb,inside_thm1,inside_thm2,r2"
    );
    // (0,0) and (1,1) are vertices; (0,1) violates p ≤ q
    let row = |ip: &str, iq: &str| {
        lines[1..]
            .iter()
            .find(|l| l.starts_with(&format!("{ip},{iq}")))
            .copied()
            .unwrap()
    };
    let inside_col = |line: &str| line.split(',').nth(5).unwrap().to_string();
    assert_eq!(inside_col(row("0.000000000000e0", "0.000000000000e0")), "1");
    assert_eq!(inside_col(row("1.000000000000e0", "1.000000000000e0")), "1");
    assert_eq!(inside_col(row("0.000000000000e0", "1.000000000000e0")), "0");
    assert!(out.join("scan_dual.csv").exists());
    assert!(out.join("scan.json").exists());
    assert!(out.join("triangle.csv").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn power_phase_scan_carries_thm2_membership() {
    let dir = tmp_dir("scan-power");
    let cfg = write_config(
        &dir,
        r#"{
        "n": 2,
        "phase.kind": "power",
        "phase.m": 2,
        "ladder.deltas": [0.25, 0.125],
        "scaling.x_samples": 5,
        "scaling.t_samples": 4,
        "quad.nodes_per_axis": 8,
        "quad.interp": "linear",
        "scan.axis_points": 2,
        "scan.with_norms": false
    }"#,
    );
    let out = dir.join("out");
    let status = bin()
        .args(["scan", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "power-phase scan failed");
    let csv = std::fs::read_to_string(out.join("scan.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    // inside_thm2 column populated for every row
    for line in &lines[1..] {
        let col = line.split(',').nth(6).unwrap();
        assert!(col == "0" || col == "1", "inside_thm2 missing: {line}");
    }
    // triangle.csv carries the (4/5, 1/5) vertex
    let tri = std::fs::read_to_string(out.join("triangle.csv")).unwrap();
    assert!(tri.contains("C2,8.000000000000e-1,2.000000000000e-1"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn missing_subcommand_prints_usage() {
    let output = bin().output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("USAGE"));
}
