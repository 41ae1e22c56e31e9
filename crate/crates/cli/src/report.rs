//! Run artifacts: RFC-4180 CSV files and the JSON run manifest, written
//! atomically so a crash never leaves results without a (failed) manifest.

use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.12e}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut text = String::new();
    text.push_str(
        &header
            .iter()
            .map(|h| csv_field(h))
            .collect::<Vec<_>>()
            .join(","),
    );
    text.push_str("\r\n");
    for row in rows {
        text.push_str(
            &row.iter()
                .map(|f| csv_field(f))
                .collect::<Vec<_>>()
                .join(","),
        );
        text.push_str("\r\n");
    }
    atomic_write(path, text.as_bytes())
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

/// One named check with its achieved value against a tolerance.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub achieved: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn leq(name: &str, achieved: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: achieved <= tolerance && achieved.is_finite(),
            achieved,
            tolerance,
        }
    }

    pub fn within(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: (value - target).abs() <= tolerance && value.is_finite(),
            achieved: value,
            tolerance,
        }
    }
}

pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub started: u64,
    pub checks: Vec<Check>,
    pub outputs: Vec<PathBuf>,
    pub notes: Vec<String>,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl Manifest {
    pub fn begin(command: &str, config_hash: String) -> Self {
        Self {
            command: command.to_string(),
            config_hash,
            started: now_unix(),
            checks: Vec::new(),
            outputs: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.to_path_buf());
    }

    pub fn note(&mut self, s: String) {
        self.notes.push(s);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Write the manifest; `status` overrides the pass/fail summary when the
    /// run aborted early.
    pub fn finish(&self, dir: &Path, status: Option<&str>) -> std::io::Result<()> {
        let status = status
            .map(|s| s.to_string())
            .unwrap_or_else(|| if self.all_passed() { "pass" } else { "fail" }.to_string());
        let body = json!({
            "command": self.command,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "config_hash": self.config_hash,
            "started_unix": self.started,
            "finished_unix": now_unix(),
            "status": status,
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "passed": c.passed,
                "achieved": c.achieved,
                "tolerance": c.tolerance,
            })).collect::<Vec<_>>(),
            "outputs": self.outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "notes": self.notes,
        });
        atomic_write(
            &dir.join("manifest.json"),
            serde_json::to_string_pretty(&body)
                .expect("manifest serializes")
                .as_bytes(),
        )
    }
}
