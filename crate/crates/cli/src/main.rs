//! Batch driver for the convolution-operator experiment families.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 usage or config
//! error, 3 numeric/accuracy failure.

mod cmds;
mod config;
mod report;

use cmds::CmdError;
use config::RunConfig;
use serde_json::Value;
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "\
hgconv — numerical experiments for graph-measure convolution on the Heisenberg group

USAGE:
    hgconv <SUBCOMMAND> [FLAGS]

SUBCOMMANDS:
    verify-lemma6     closed-form transform of F_{n,k} vs adaptive quadrature
    spectral-bounds   uniform diagonal-entry bounds and the oscillatory envelope
    scaling           ladder experiments at configured (1/p, 1/q) points
    scan              full (1/p, 1/q) grid scan with membership flags
    kernel-decay      smoothed-kernel decay and route-agreement checks
    plancherel        norm-to-entry-sum ratio constancy across test kernels
    group-selftest    group axioms on random triples

FLAGS:
    --config PATH     flat JSON config file (unknown keys rejected)
    --out DIR         output directory (default hgconv-out/<subcommand>)
    --workers K       rayon worker count (default: all cores)
    --n N             dimension override
    --m M             power-phase exponent override
    --phase KIND      quadratic | power
    --a LIST          comma-separated quadratic coefficients
    --kmax K          verify-lemma6 Laguerre-order cap
    --nmax N          verify-lemma6 dimension cap
    --xi-count C      verify-lemma6 frequency-grid size
";

fn parse_args() -> Result<(String, RunConfig, PathBuf), String> {
    let mut args = std::env::args().skip(1);
    let sub = args
        .next()
        .ok_or_else(|| "missing subcommand".to_string())?;
    let mut cfg_path: Option<PathBuf> = None;
    let mut overrides: Vec<(String, Value)> = Vec::new();
    let mut out: Option<PathBuf> = None;
    while let Some(flag) = args.next() {
        let mut need = |name: &str| -> Result<String, String> {
            args.next().ok_or_else(|| format!("{name} needs a value"))
        };
        match flag.as_str() {
            "--config" => cfg_path = Some(PathBuf::from(need("--config")?)),
            "--out" => out = Some(PathBuf::from(need("--out")?)),
            "--workers" => {
                let w: usize = need("--workers")?
                    .parse()
                    .map_err(|_| "--workers must be an integer".to_string())?;
                overrides.push(("workers".into(), Value::from(w)));
            }
            "--n" => {
                let n: usize = need("--n")?
                    .parse()
                    .map_err(|_| "--n must be an integer".to_string())?;
                overrides.push(("n".into(), Value::from(n)));
            }
            "--m" => {
                let m: u32 = need("--m")?
                    .parse()
                    .map_err(|_| "--m must be an integer".to_string())?;
                overrides.push(("phase.m".into(), Value::from(m)));
            }
            "--phase" => {
                let kind = need("--phase")?;
                if kind != "quadratic" && kind != "power" {
                    return Err(format!("--phase must be quadratic or power, got {kind}"));
                }
                overrides.push(("phase.kind".into(), Value::from(kind)));
            }
            "--a" => {
                let list: Result<Vec<f64>, _> =
                    need("--a")?.split(',').map(|s| s.trim().parse()).collect();
                let list = list.map_err(|_| "--a must be comma-separated numbers".to_string())?;
                overrides.push(("phase.a".into(), serde_json::json!(list)));
            }
            "--kmax" => {
                let k: usize = need("--kmax")?
                    .parse()
                    .map_err(|_| "--kmax must be an integer".to_string())?;
                overrides.push(("lemma6.k_max".into(), Value::from(k)));
            }
            "--nmax" => {
                let k: usize = need("--nmax")?
                    .parse()
                    .map_err(|_| "--nmax must be an integer".to_string())?;
                overrides.push(("lemma6.n_max".into(), Value::from(k)));
            }
            "--xi-count" => {
                let k: usize = need("--xi-count")?
                    .parse()
                    .map_err(|_| "--xi-count must be an integer".to_string())?;
                overrides.push(("lemma6.xi_count".into(), Value::from(k)));
            }
            other => return Err(format!("unknown flag '{other}'")),
        }
    }
    let mut cfg = match cfg_path {
        Some(p) => RunConfig::from_file(&p).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    for (k, v) in overrides {
        cfg.set(&k, v);
    }
    let out_dir = out
        .or_else(|| {
            cfg.get("out")
                .and_then(|v| v.as_str())
                .map(|s| PathBuf::from(s).join(&sub))
        })
        .unwrap_or_else(|| PathBuf::from("hgconv-out").join(&sub));
    Ok((sub, cfg, out_dir))
}

fn main() -> ExitCode {
    let (sub, cfg, out) = match parse_args() {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}\n\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    if let Ok(workers) = cfg.usize_or("workers", 0) {
        if workers > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build_global();
        }
    }
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!(
            "error: cannot create output directory {}: {e}",
            out.display()
        );
        return ExitCode::from(2);
    }
    let result = match sub.as_str() {
        "verify-lemma6" => cmds::verify_lemma6(&cfg, &out),
        "spectral-bounds" => cmds::spectral_bounds(&cfg, &out),
        "scaling" => cmds::scaling(&cfg, &out),
        "scan" => cmds::scan(&cfg, &out),
        "kernel-decay" => cmds::kernel_decay(&cfg, &out),
        "plancherel" => cmds::plancherel(&cfg, &out),
        "group-selftest" => cmds::group_selftest(&cfg, &out),
        other => {
            eprintln!("error: unknown subcommand '{other}'\n\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    match result {
        Ok(manifest) => {
            let ok = manifest.all_passed();
            for c in &manifest.checks {
                println!(
                    "{}: {} (achieved {:.6e}, tolerance {:.6e})",
                    c.name,
                    if c.passed { "pass" } else { "FAIL" },
                    c.achieved,
                    c.tolerance
                );
            }
            if let Err(e) = manifest.finish(&out, None) {
                eprintln!("error: cannot write manifest: {e}");
                return ExitCode::from(3);
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CmdError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Numeric(msg)) => {
            eprintln!("numeric error: {msg}");
            let m = report::Manifest::begin(&sub, cfg.hash());
            let _ = m.finish(&out, Some("error"));
            ExitCode::from(3)
        }
        Err(CmdError::Io(msg)) => {
            eprintln!("io error: {msg}");
            let m = report::Manifest::begin(&sub, cfg.hash());
            let _ = m.finish(&out, Some("error"));
            ExitCode::from(3)
        }
    }
}
