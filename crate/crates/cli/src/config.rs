//! Flat key-value run configuration: a single JSON object with dotted keys,
//! unknown keys rejected, CLI flags overriding file values.

use hgconv_core::convolve::{InterpOrder, QuadratureSpec, WQuadMode};
use hgconv_core::measures::{GraphMeasure, MeasureConfig};
use hgconv_core::typeset::{ScalingContext, ScalingLadder};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Every key the config file may carry.
pub const KNOWN_KEYS: &[&str] = &[
    "n",
    "phase.kind",
    "phase.a",
    "phase.m",
    "out",
    "workers",
    "lemma6.n_max",
    "lemma6.k_max",
    "lemma6.xi_count",
    "lemma6.tol",
    "spectral.mu_dims",
    "spectral.alpha_max",
    "spectral.lambda_per_sign",
    "spectral.lambda_min",
    "spectral.lambda_max",
    "spectral.y_values",
    "spectral.n_moll",
    "spectral.k_max",
    "spectral.m_values",
    "spectral.vdc_points",
    "grid.spatial_points",
    "grid.central_points",
    "grid.spatial_half",
    "grid.central_half",
    "quad.nodes_per_axis",
    "quad.interp",
    "quad.mode",
    "ladder.deltas",
    "ladder.cells_per_delta",
    "scaling.points",
    "scaling.x_samples",
    "scaling.t_samples",
    "scan.axis_points",
    "scan.with_norms",
    "scan.norm_iterations",
    "scan.norm_spatial_points",
    "scan.norm_central_points",
    "kernel.z_re_decay",
    "kernel.n_moll",
    "kernel.s_count",
    "kernel.agreement_tol",
    "plancherel.lambda_panels",
    "selftest.trials",
];

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    map: BTreeMap<String, Value>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

type CfgResult<T> = Result<T, ConfigError>;

impl RunConfig {
    pub fn from_file(path: &PathBuf) -> CfgResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("{} is not valid JSON: {e}", path.display())))?;
        let Value::Object(obj) = value else {
            return Err(ConfigError("config must be a flat JSON object".into()));
        };
        let mut map = BTreeMap::new();
        for (k, v) in obj {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(ConfigError(format!("unknown config key '{k}'")));
            }
            if v.is_object() {
                return Err(ConfigError(format!(
                    "key '{k}': nested objects are not allowed, the config is flat"
                )));
            }
            map.insert(k, v);
        }
        Ok(Self { map })
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.map.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.map.get(key)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> CfgResult<usize> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|u| u as usize)
                .ok_or_else(|| ConfigError(format!("key '{key}' must be a non-negative integer"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> CfgResult<f64> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| ConfigError(format!("key '{key}' must be a number"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> CfgResult<bool> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_bool()
                .ok_or_else(|| ConfigError(format!("key '{key}' must be a boolean"))),
        }
    }

    pub fn str_or(&self, key: &str, default: &str) -> CfgResult<String> {
        match self.map.get(key) {
            None => Ok(default.to_string()),
            Some(v) => v
                .as_str()
                .map(|s| s.to_string())
                .ok_or_else(|| ConfigError(format!("key '{key}' must be a string"))),
        }
    }

    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> CfgResult<Vec<f64>> {
        match self.map.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| {
                    v.as_f64()
                        .ok_or_else(|| ConfigError(format!("key '{key}' must hold numbers")))
                })
                .collect(),
            Some(_) => Err(ConfigError(format!("key '{key}' must be an array"))),
        }
    }

    pub fn u32_list_or(&self, key: &str, default: &[u32]) -> CfgResult<Vec<u32>> {
        Ok(self
            .f64_list_or(key, &default.iter().map(|&v| v as f64).collect::<Vec<_>>())?
            .into_iter()
            .map(|v| v as u32)
            .collect())
    }

    /// The measure described by n / phase.kind / phase.a / phase.m.
    pub fn measure(&self) -> CfgResult<GraphMeasure> {
        let n = self.usize_or("n", 1)?;
        let kind = self.str_or("phase.kind", "quadratic")?;
        let a = match self.map.get("phase.a") {
            Some(_) => Some(self.f64_list_or("phase.a", &[])?),
            None if kind == "quadratic" => Some(vec![1.0; n]),
            None => None,
        };
        let m = self.usize_or("phase.m", 2)? as u32;
        let mc = MeasureConfig {
            n,
            kind,
            a,
            m: Some(m),
        };
        mc.build().map_err(|e| ConfigError(e.to_string()))
    }

    pub fn quadrature(&self) -> CfgResult<QuadratureSpec> {
        let interp = match self.str_or("quad.interp", "cubic")?.as_str() {
            "linear" => InterpOrder::Linear,
            "cubic" => InterpOrder::Cubic,
            other => {
                return Err(ConfigError(format!(
                    "quad.interp must be 'linear' or 'cubic', got '{other}'"
                )))
            }
        };
        let mode = match self.str_or("quad.mode", "radial-angular")?.as_str() {
            "tensor" => WQuadMode::Tensor,
            "radial-angular" => WQuadMode::RadialAngular,
            other => {
                return Err(ConfigError(format!(
                    "quad.mode must be 'tensor' or 'radial-angular', got '{other}'"
                )))
            }
        };
        let spec = QuadratureSpec {
            nodes_per_axis: self.usize_or("quad.nodes_per_axis", 16)?,
            interp,
            mode,
        };
        spec.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(spec)
    }

    pub fn ladder(&self) -> CfgResult<ScalingLadder> {
        let ladder = ScalingLadder {
            deltas: self.f64_list_or("ladder.deltas", &[0.25, 0.125, 0.0625, 0.03125])?,
            cells_per_delta: self.usize_or("ladder.cells_per_delta", 4)?,
        };
        Ok(ladder)
    }

    pub fn scaling_ctx(&self) -> CfgResult<ScalingContext> {
        Ok(ScalingContext {
            x_samples_per_axis: self.usize_or("scaling.x_samples", 17)?,
            t_samples: self.usize_or("scaling.t_samples", 5)?,
            quad: self.quadrature()?,
        })
    }

    /// Canonical serialization and its FNV-1a hash for the manifest.
    pub fn canonical(&self) -> String {
        serde_json::to_string(&self.map).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.canonical().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}
