//! The singular measure ν carried by the graph of the phase φ: smooth cutoff
//! factors η_j, the two phase families (poliradial quadratic and radial
//! power), and the product density η.
//!
//! The concrete bump is built from ψ(u) = e^{−1/u}: with
//! g(u) = ψ(u)/(ψ(u)+ψ(1−u)), the factor η_j equals 1 on the plateau,
//! g((b−|t|)/(b−a)) on the transition a < |t| < b, and 0 outside. First and
//! second derivatives of the transition are carried analytically; the
//! fractional-kernel module needs them for its singular-cell integration by
//! parts.

use crate::error::{Error, Result};
use crate::quad::{self, QuadOpts};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

fn psi(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

/// g, g', g'' of the transition profile on (0, 1); g(0)=0, g(1)=1.
fn transition(u: f64) -> (f64, f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if u >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let a = psi(u);
    let b = psi(1.0 - u);
    let ap = if a == 0.0 { 0.0 } else { a / (u * u) };
    let bp = if b == 0.0 {
        0.0
    } else {
        -b / ((1.0 - u) * (1.0 - u))
    };
    let app = if a == 0.0 {
        0.0
    } else {
        a * (1.0 / u.powi(4) - 2.0 / u.powi(3))
    };
    let bpp = if b == 0.0 {
        0.0
    } else {
        b * (1.0 / (1.0 - u).powi(4) - 2.0 / (1.0 - u).powi(3))
    };
    let d = a + b;
    let dp = ap + bp;
    let dpp = app + bpp;
    let g = a / d;
    let gp = (ap * d - a * dp) / (d * d);
    let gpp = (app * d - a * dpp) / (d * d) - 2.0 * (dp / d) * gp;
    (g, gp, gpp)
}

/// One smooth cutoff factor: plateau value 1 on [−a, a], support (−b, b).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub plateau_radius: f64,
    pub support_radius: f64,
    /// Refinement factor for the cached Fourier-transform table; doubling it
    /// halves the grid step and doubles the covered frequency range.
    pub transform_resolution: f64,
    #[serde(skip)]
    transform: OnceLock<TransformTable>,
}

impl PartialEq for CutoffSpec {
    fn eq(&self, other: &Self) -> bool {
        self.plateau_radius == other.plateau_radius
            && self.support_radius == other.support_radius
            && self.transform_resolution == other.transform_resolution
    }
}

#[derive(Debug, Clone)]
struct TransformTable {
    step: f64,
    values: Vec<f64>,
    l1: f64,
    l1_err: f64,
}

impl TransformTable {
    /// Degree-5 interpolation of the even table; zero beyond the range.
    fn interp(&self, xi: f64) -> f64 {
        let x = xi.abs() / self.step;
        let i = x.floor() as usize;
        if i + 3 >= self.values.len() {
            return 0.0;
        }
        let t = x - i as f64;
        let grab = |k: i64| -> f64 {
            // evenness mirrors negative indices
            self.values[k.unsigned_abs() as usize]
        };
        let p = [
            grab(i as i64 - 2),
            grab(i as i64 - 1),
            grab(i as i64),
            grab(i as i64 + 1),
            grab(i as i64 + 2),
            grab(i as i64 + 3),
        ];
        crate::quad::lagrange6_uniform(&p, t)
    }
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self::new(1.0, 2.0).unwrap()
    }
}

impl CutoffSpec {
    pub fn new(plateau_radius: f64, support_radius: f64) -> Result<Self> {
        if !(plateau_radius > 0.0 && support_radius > plateau_radius) {
            return Err(Error::Config(format!(
                "cutoff radii must satisfy 0 < plateau < support, got ({plateau_radius}, {support_radius})"
            )));
        }
        Ok(Self {
            plateau_radius,
            support_radius,
            transform_resolution: 1.0,
            transform: OnceLock::new(),
        })
    }

    pub fn with_resolution(mut self, r: f64) -> Self {
        self.transform_resolution = r.max(0.25);
        self.transform = OnceLock::new();
        self
    }

    fn table(&self) -> &TransformTable {
        self.transform.get_or_init(|| self.build_table())
    }

    fn build_table(&self) -> TransformTable {
        let width = self.support_radius - self.plateau_radius;
        let res = self.transform_resolution;
        // Step resolves the ~π/b oscillation of the transform, the range is
        // set by the observed super-polynomial decay of the bump transform.
        let step = (0.05 / width).min(0.15 / self.support_radius) / res;
        let xi_max = 320.0 / width * res;
        let count = (xi_max / step).ceil() as usize + 1;
        let values: Vec<f64> = (0..count)
            .map(|k| self.transform_direct(k as f64 * step))
            .collect();
        // ∫|η̂| over the covered range: adaptive on the interpolated table
        // with breaks at the sign changes so the kinks of |η̂| are cell edges.
        let mut zero_breaks = Vec::new();
        for k in 1..count {
            if values[k - 1].signum() != values[k].signum() {
                zero_breaks.push(step * k as f64);
            }
        }
        let table_view = TransformTable {
            step,
            values: values.clone(),
            l1: 0.0,
            l1_err: 0.0,
        };
        let end = step * (count - 4) as f64;
        let (body, body_err) = match quad::integrate_complex_with_breaks(
            |xi| num_complex::Complex64::new(table_view.interp(xi).abs(), 0.0),
            0.0,
            end,
            &zero_breaks,
            &QuadOpts::with_tol(1e-10, 1e-9),
        ) {
            Ok(r) => (r.value.re, r.abs_error),
            Err(_) => (f64::NAN, f64::NAN),
        };
        // Tail bound from four integrations by parts: |η̂(ξ)| ≤ ‖η⁗‖₁ / ξ⁴.
        let d4_l1 = self.fourth_derivative_l1();
        let tail = d4_l1 / (3.0 * end.powi(3));
        let l1 = 2.0 * body + 2.0 * tail;
        let l1_err = 2.0 * tail + 2.0 * body_err + 2.0 * body * 1e-10;
        TransformTable {
            step,
            values,
            l1,
            l1_err,
        }
    }

    /// η̂ evaluated by direct quadrature, split into a few periods per panel.
    fn transform_direct(&self, xi: f64) -> f64 {
        let b = self.support_radius;
        let breaks = quad::equal_phase_breaks(0.0, b, xi * b, 100_000);
        let opts = QuadOpts::with_tol(1e-13, 1e-12);
        let r = quad::integrate_complex_with_breaks(
            |s| num_complex::Complex64::new(2.0 * self.eval(s) * (s * xi).cos(), 0.0),
            0.0,
            b,
            &breaks,
            &opts,
        )
        .expect("bump transform quadrature");
        r.value.re
    }

    fn fourth_derivative_l1(&self) -> f64 {
        // |η⁗| via five-point differences of the analytic second derivative.
        let h = 1e-4 * (self.support_radius - self.plateau_radius);
        let d4 = |t: f64| {
            (-self.eval_d2(t - 2.0 * h) + 16.0 * self.eval_d2(t - h) - 30.0 * self.eval_d2(t)
                + 16.0 * self.eval_d2(t + h)
                - self.eval_d2(t + 2.0 * h))
                / (12.0 * h * h)
        };
        let (v, _) = quad::integrate_real(
            |t| d4(t).abs(),
            0.0,
            self.support_radius + 4.0 * h,
            &QuadOpts::with_tol(1e-6, 1e-6),
        )
        .unwrap_or((1e4, 0.0));
        2.0 * v
    }

    /// Bump value at `t`; 1 on the plateau, 0 outside the support.
    pub fn eval(&self, t: f64) -> f64 {
        let a = self.plateau_radius;
        let b = self.support_radius;
        let u = t.abs();
        if u <= a {
            1.0
        } else if u >= b {
            0.0
        } else {
            transition((b - u) / (b - a)).0
        }
    }

    /// (η, η′, η″) at `t`.
    pub fn eval_with_derivs(&self, t: f64) -> (f64, f64, f64) {
        let a = self.plateau_radius;
        let b = self.support_radius;
        let u = t.abs();
        if u <= a {
            (1.0, 0.0, 0.0)
        } else if u >= b {
            (0.0, 0.0, 0.0)
        } else {
            let w = b - a;
            let (g, gp, gpp) = transition((b - u) / w);
            let sign = if t < 0.0 { -1.0 } else { 1.0 };
            (g, -sign * gp / w, gpp / (w * w))
        }
    }

    fn eval_d2(&self, t: f64) -> f64 {
        self.eval_with_derivs(t).2
    }

    /// η̂(ξ) = ∫ η(σ) e^{−iσξ} dσ (real and even), from the cached table.
    pub fn transform_value(&self, xi: f64) -> f64 {
        self.table().interp(xi)
    }

    /// Frequency beyond which the cached transform is treated as zero.
    pub fn transform_cutoff(&self) -> f64 {
        let tab = self.table();
        tab.step * (tab.values.len().saturating_sub(4)) as f64
    }

    /// ‖η̂‖₁ with a reported error bound (quadrature + tail).
    pub fn transform_l1(&self) -> Result<(f64, f64)> {
        let tab = self.table();
        if !tab.l1.is_finite() {
            return Err(Error::Accuracy {
                requested: 1e-8,
                achieved: f64::INFINITY,
            });
        }
        Ok((tab.l1, tab.l1_err))
    }
}

/// Phase of the graph: poliradial quadratic Σ a_j |w_j|² or radial |w|^{2m}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PhaseSpec {
    Quadratic { a: Vec<f64> },
    Power { m: u32 },
}

impl PhaseSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            PhaseSpec::Quadratic { a } => {
                if a.len() != n {
                    return Err(Error::Dimension {
                        expected: n,
                        found: a.len(),
                    });
                }
                if a.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Numeric(
                        "quadratic coefficients must be finite".into(),
                    ));
                }
            }
            PhaseSpec::Power { m } => {
                if *m < 1 {
                    return Err(Error::Range("power exponent m must be ≥ 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// φ(w) with |w_j|² = w_j² + w_{n+j}².
pub fn eval_phase(phase: &PhaseSpec, n: usize, w: &[f64]) -> Result<f64> {
    if w.len() != 2 * n {
        return Err(Error::Dimension {
            expected: 2 * n,
            found: w.len(),
        });
    }
    Ok(match phase {
        PhaseSpec::Quadratic { a } => {
            let mut s = 0.0;
            for j in 0..n {
                s += a[j] * (w[j] * w[j] + w[n + j] * w[n + j]);
            }
            s
        }
        PhaseSpec::Power { m } => {
            let r2: f64 = w.iter().map(|v| v * v).sum();
            r2.powi(*m as i32)
        }
    })
}

/// The measure ν: dimension, phase, and its cutoff factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMeasure {
    pub n: usize,
    pub phase: PhaseSpec,
    pub cutoffs: Vec<CutoffSpec>,
}

impl GraphMeasure {
    pub fn new(n: usize, phase: PhaseSpec, cutoffs: Vec<CutoffSpec>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Range("dimension n must be ≥ 1".into()));
        }
        phase.validate(n)?;
        let want = match phase {
            PhaseSpec::Quadratic { .. } => n,
            PhaseSpec::Power { .. } => 1,
        };
        if cutoffs.len() != want {
            return Err(Error::Dimension {
                expected: want,
                found: cutoffs.len(),
            });
        }
        Ok(Self { n, phase, cutoffs })
    }

    /// Quadratic phase with default cutoffs, one per complex coordinate.
    pub fn quadratic(a: Vec<f64>) -> Result<Self> {
        let n = a.len();
        let cutoffs = vec![CutoffSpec::default(); n];
        Self::new(n, PhaseSpec::Quadratic { a }, cutoffs)
    }

    /// Radial power phase |w|^{2m} with a single radial cutoff.
    pub fn power(n: usize, m: u32) -> Result<Self> {
        Self::new(n, PhaseSpec::Power { m }, vec![CutoffSpec::default()])
    }

    pub fn phase_at(&self, w: &[f64]) -> Result<f64> {
        eval_phase(&self.phase, self.n, w)
    }

    /// Density η(w): Π_j η_j(|w_j|²) for the poliradial case, η_0(|w|²) for
    /// the radial power case.
    pub fn density(&self, w: &[f64]) -> f64 {
        debug_assert_eq!(w.len(), 2 * self.n);
        match &self.phase {
            PhaseSpec::Quadratic { .. } => {
                let n = self.n;
                let mut d = 1.0;
                for j in 0..n {
                    let r2 = w[j] * w[j] + w[n + j] * w[n + j];
                    d *= self.cutoffs[j].eval(r2);
                    if d == 0.0 {
                        return 0.0;
                    }
                }
                d
            }
            PhaseSpec::Power { .. } => {
                let r2: f64 = w.iter().map(|v| v * v).sum();
                self.cutoffs[0].eval(r2)
            }
        }
    }

    /// Half-width of the coordinate box containing supp η.
    pub fn support_halfwidth(&self) -> f64 {
        self.cutoffs
            .iter()
            .map(|c| c.support_radius.sqrt())
            .fold(0.0, f64::max)
    }

    /// sup |∇φ| over supp η, sampled radially; sets the shrink radius of
    /// the inner sets in the scaling experiments.
    pub fn grad_phase_sup(&self) -> f64 {
        let rmax = self.support_halfwidth() * (self.n as f64).sqrt();
        let mut sup: f64 = 0.0;
        match &self.phase {
            PhaseSpec::Quadratic { a } => {
                for (aj, cutoff) in a.iter().zip(&self.cutoffs) {
                    let rj = cutoff.support_radius.sqrt();
                    sup = sup.max(2.0 * aj.abs() * rj);
                }
                // |∇φ|² = Σ 4 a_j² |w_j|²; the samplewise max over the box
                let s2: f64 = (0..self.n)
                    .map(|j| 4.0 * a[j] * a[j] * self.cutoffs[j].support_radius)
                    .sum();
                sup = sup.max(s2.sqrt());
            }
            PhaseSpec::Power { m } => {
                let m = *m as f64;
                for k in 0..=400 {
                    let r = rmax * k as f64 / 400.0;
                    sup = sup.max(2.0 * m * r.powf(2.0 * m - 1.0));
                }
            }
        }
        sup
    }
}

/// Flat config form of a measure (the CLI's `phase.*` keys).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeasureConfig {
    pub n: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
}

impl MeasureConfig {
    pub fn build(&self) -> Result<GraphMeasure> {
        match self.kind.as_str() {
            "quadratic" => {
                let a = self
                    .a
                    .clone()
                    .ok_or_else(|| Error::Config("quadratic phase needs phase.a".into()))?;
                if a.len() != self.n {
                    return Err(Error::Dimension {
                        expected: self.n,
                        found: a.len(),
                    });
                }
                GraphMeasure::quadratic(a)
            }
            "power" => {
                let m = self
                    .m
                    .ok_or_else(|| Error::Config("power phase needs phase.m".into()))?;
                GraphMeasure::power(self.n, m)
            }
            other => Err(Error::Config(format!("unknown phase kind '{other}'"))),
        }
    }

    pub fn of(gm: &GraphMeasure) -> Self {
        match &gm.phase {
            PhaseSpec::Quadratic { a } => Self {
                n: gm.n,
                kind: "quadratic".into(),
                a: Some(a.clone()),
                m: None,
            },
            PhaseSpec::Power { m } => Self {
                n: gm.n,
                kind: "power".into(),
                a: None,
                m: Some(*m),
            },
        }
    }
}
