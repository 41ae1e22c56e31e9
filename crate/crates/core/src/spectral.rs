//! Group-Fourier diagonal entries of poliradial kernels.
//!
//! For a poliradial kernel the group Fourier transform at frequency λ ≠ 0 is
//! diagonal in the Hermite basis; the diagonal entries are Laguerre
//! transforms of the partial Fourier transform in the central variable. For
//! the smoothed graph-measure kernels these collapse to products:
//!
//! * quadratic phase: μ_{N,z}(α, λ) = I_{1−z}(−λ) φ_N(λ) Π_j R_j(α_j, λ, a_j)
//!   with R_j the 1-D radial factor handled by [`radial_factor`];
//! * radial power phase: υ_{N,z}(k, λ) with a single oscillatory radial
//!   integral handled by [`upsilon_entry`].
//!
//! The module also carries the oscillatory-envelope machinery for the power
//! phase (R̂_λ and its sup over frequency) and a Plancherel-ratio check used
//! to validate the Laguerre-transform normalization end to end.

use crate::error::{Error, Result};
use crate::kernels::{iz_prefactor, MollifierSpec};
use crate::measures::{CutoffSpec, GraphMeasure, PhaseSpec};
use crate::quad::{self, QuadOpts};
use crate::specfun::{f_nk_hat, laguerre_damped, recip_gamma};
use num_complex::Complex64;
use rayon::prelude::*;

/// Multi-index α ∈ ℕ₀ⁿ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// Enumerate all α ∈ ℕ₀ⁿ with |α| ≤ budget.
pub fn multi_indices(n: usize, budget: u32) -> Vec<MultiIndex> {
    fn rec(n: usize, budget: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if n == 1 {
            for k in 0..=budget {
                let mut v = prefix.clone();
                v.push(k);
                out.push(MultiIndex(v));
            }
            return;
        }
        for k in 0..=budget {
            prefix.push(k);
            rec(n - 1, budget - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, budget, &mut Vec::new(), &mut out);
    out
}

/// One diagonal entry with its quadrature error estimate.
#[derive(Debug, Clone)]
pub struct DiagonalEntry {
    pub index: MultiIndex,
    pub lambda: f64,
    pub z: Complex64,
    pub n_moll: u32,
    pub value: Complex64,
    pub error: f64,
}

/// I_{1−z}(−λ) = C_{1−z} |λ|^{−z}.
pub fn i_one_minus_z(z: Complex64, lambda: f64) -> Complex64 {
    iz_prefactor(Complex64::new(1.0, 0.0) - z) * (-z * lambda.abs().ln()).exp()
}

/// The diagonal prefactor C_n = (2π)ⁿ of the group Fourier transform in the
/// Hermite basis. It multiplies every entry uniformly and cancels in all
/// bound ratios; recorded here for reference.
pub fn hermite_diag_prefactor(n: usize) -> f64 {
    (2.0 * std::f64::consts::PI).powi(n as i32)
}

/// Direct route for the 1-D radial factor
/// ∫₀^∞ η(r²) e^{iλ a r²} r L_α(|λ|r²/2) e^{−|λ|r²/4} dr.
pub fn radial_factor(
    alpha: u32,
    lambda: f64,
    a: f64,
    cutoff: &CutoffSpec,
) -> Result<(Complex64, f64)> {
    if lambda == 0.0 {
        return Err(Error::Domain("radial factor requires λ ≠ 0".into()));
    }
    let b2 = cutoff.support_radius; // integrand vanishes for r² ≥ b2
    let rmax = b2.sqrt();
    let breaks = radial_breaks(alpha, lambda, a, b2);
    let opts = QuadOpts {
        tol_abs: 1e-13,
        tol_rel: 1e-10,
        max_cells: 400_000,
    };
    let half_l = 0.5 * lambda.abs();
    let r = quad::integrate_complex_with_breaks(
        |r| {
            let r2 = r * r;
            // L_α(|λ|r²/2) e^{−|λ|r²/4} in damped form
            let base = cutoff.eval(r2) * r * laguerre_damped(alpha, 0, half_l * r2);
            Complex64::from_polar(1.0, lambda * a * r2) * base
        },
        0.0,
        rmax,
        &breaks,
        &opts,
    )?;
    Ok((r.value, r.abs_error))
}

/// Breakpoints in r resolving both the e^{iλar²} oscillation and the
/// Laguerre sign changes (uniform in r²).
fn radial_breaks(alpha: u32, lambda: f64, a: f64, b2: f64) -> Vec<f64> {
    let phase_panels = ((lambda * a).abs() * b2 / std::f64::consts::PI)
        .ceil()
        .min(200_000.0) as usize;
    let lag_panels = (2 * alpha as usize + 8).min(4_000);
    let panels = (phase_panels + lag_panels).max(8);
    (1..panels)
        .map(|k| (b2 * k as f64 / panels as f64).sqrt())
        .collect()
}

/// Convolution route for the radial factor:
/// |λ|^{−1} (2π)^{−1} ∫ F̂_{1,α}(x − 2v/|λ|) η̂(v) dv at x = −2 sgn(λ) a.
pub fn radial_factor_conv(
    alpha: u32,
    lambda: f64,
    a: f64,
    cutoff: &CutoffSpec,
) -> Result<(Complex64, f64)> {
    if lambda == 0.0 {
        return Err(Error::Domain("radial factor requires λ ≠ 0".into()));
    }
    let x = -2.0 * lambda.signum() * a;
    let vmax = cutoff.transform_cutoff();
    let opts = QuadOpts {
        tol_abs: 1e-13,
        tol_rel: 1e-9,
        max_cells: 400_000,
    };
    // F̂ rotates in phase at rate ~2/|λ| per unit v near the peak; a modest
    // uniform pre-split keeps the adaptive pass cheap.
    let panels = (64.0 + 2.0 * vmax / (1.0 + lambda.abs())).min(4096.0) as usize;
    let breaks: Vec<f64> = (1..panels)
        .map(|k| -vmax + 2.0 * vmax * k as f64 / panels as f64)
        .collect();
    let r = quad::integrate_complex_with_breaks(
        |v| {
            let fh = f_nk_hat(1, alpha, x - 2.0 * v / lambda.abs()).expect("n=1 never overflows");
            fh * cutoff.transform_value(v)
        },
        -vmax,
        vmax,
        &breaks,
        &opts,
    )?;
    let scale = 1.0 / (lambda.abs() * 2.0 * std::f64::consts::PI);
    Ok((r.value * scale, r.abs_error * scale))
}

/// μ_{N,z}(α, λ) for the quadratic phase.
pub fn mu_entry(
    z: Complex64,
    n_moll: u32,
    alpha: &MultiIndex,
    lambda: f64,
    gm: &GraphMeasure,
    moll: &MollifierSpec,
) -> Result<DiagonalEntry> {
    let PhaseSpec::Quadratic { a } = &gm.phase else {
        return Err(Error::Domain(
            "mu_entry needs a quadratic-phase measure".into(),
        ));
    };
    if lambda == 0.0 {
        return Err(Error::Domain(
            "diagonal entries are defined for λ ≠ 0".into(),
        ));
    }
    if alpha.0.len() != gm.n {
        return Err(Error::Dimension {
            expected: gm.n,
            found: alpha.0.len(),
        });
    }
    let prefactor = i_one_minus_z(z, lambda) * moll.phi_n(n_moll, lambda);
    let mut value = prefactor;
    let mut rel_err = 0.0;
    for ((&aj, cutoff), &alpha_j) in a.iter().zip(&gm.cutoffs).zip(&alpha.0) {
        let (rj, ej) = radial_factor(alpha_j, lambda, aj, cutoff)?;
        value *= rj;
        rel_err += if rj.norm() > 0.0 { ej / rj.norm() } else { ej };
    }
    Ok(DiagonalEntry {
        index: alpha.clone(),
        lambda,
        z,
        n_moll,
        value,
        error: value.norm() * rel_err,
    })
}

/// υ_{N,z}(k, λ) for the radial power phase |w|^{2m}.
#[allow(clippy::too_many_arguments)]
pub fn upsilon_entry(
    z: Complex64,
    n_moll: u32,
    k: u32,
    lambda: f64,
    m: u32,
    n: usize,
    cutoff: &CutoffSpec,
    moll: &MollifierSpec,
) -> Result<DiagonalEntry> {
    if lambda == 0.0 {
        return Err(Error::Domain(
            "diagonal entries are defined for λ ≠ 0".into(),
        ));
    }
    if m < 1 {
        return Err(Error::Range("power exponent m must be ≥ 1".into()));
    }
    let (integral, err) = upsilon_radial_integral(k, lambda, m, n, cutoff)?;
    let mut inv_ratio = 1.0; // k!/(k+n−1)!
    for i in 1..n as u32 {
        inv_ratio /= (k + i) as f64;
    }
    let prefactor = i_one_minus_z(z, lambda) * moll.phi_n(n_moll, lambda) * inv_ratio;
    Ok(DiagonalEntry {
        index: MultiIndex(vec![k]),
        lambda,
        z,
        n_moll,
        value: prefactor * integral,
        error: prefactor.norm() * err,
    })
}

/// ∫₀^∞ η₀(s²) L_k^{n−1}(|λ|s²/2) e^{−|λ|s²/4} e^{iλ s^{2m}} s^{2n−1} ds.
pub fn upsilon_radial_integral(
    k: u32,
    lambda: f64,
    m: u32,
    n: usize,
    cutoff: &CutoffSpec,
) -> Result<(Complex64, f64)> {
    let b2 = cutoff.support_radius;
    let smax = b2.sqrt();
    // oscillation λ s^{2m}: equal-phase breakpoints s_j = (2πj/|λ|)^{1/2m}
    let mut breaks = Vec::new();
    let total_phase = lambda.abs() * b2.powi(m as i32);
    let phase_panels = (total_phase / std::f64::consts::PI).ceil().min(400_000.0) as usize;
    for j in 1..phase_panels {
        let s = (2.0 * std::f64::consts::PI * j as f64 / lambda.abs()).powf(1.0 / (2.0 * m as f64));
        if s < smax {
            breaks.push(s);
        }
    }
    breaks.extend(radial_breaks(k, lambda, 0.0, b2));
    let opts = QuadOpts {
        tol_abs: 1e-13,
        tol_rel: 1e-10,
        max_cells: 600_000,
    };
    let half_l = 0.5 * lambda.abs();
    let r = quad::integrate_complex_with_breaks(
        |s| {
            let s2 = s * s;
            let base = cutoff.eval(s2)
                * laguerre_damped(k, n as u32 - 1, half_l * s2)
                * s.powi(2 * n as i32 - 1);
            Complex64::from_polar(1.0, lambda * s2.powi(m as i32)) * base
        },
        0.0,
        smax,
        &breaks,
        &opts,
    )?;
    Ok((r.value, r.abs_error))
}

/// R̂_λ(ξ) = ∫₀^{|λ|} e^{i(2^m sgn(λ)|λ|^{1−m} σ^m − ξσ)} dσ.
pub fn r_lambda_hat(lambda: f64, m: u32, xi: f64) -> Result<Complex64> {
    if lambda == 0.0 {
        return Err(Error::Domain("R_λ requires λ ≠ 0".into()));
    }
    let l = lambda.abs();
    let c = 2f64.powi(m as i32) * lambda.signum() * l.powf(1.0 - m as f64);
    let mf = m as f64;
    let mut breaks = Vec::new();
    // stationary point of c σ^m − ξσ
    if m >= 2 && c * xi > 0.0 {
        let sp = (xi / (mf * c)).abs().powf(1.0 / (mf - 1.0));
        if sp < l {
            breaks.push(sp);
            breaks.push(0.5 * sp);
            breaks.push((1.5 * sp).min(l * 0.999));
        }
    }
    let span = c.abs() * l.powf(mf) + xi.abs() * l;
    breaks.extend(quad::equal_phase_breaks(0.0, l, span, 400_000));
    let opts = QuadOpts {
        tol_abs: 1e-11,
        tol_rel: 1e-9,
        max_cells: 800_000,
    };
    let r = quad::integrate_complex_with_breaks(
        |s| Complex64::from_polar(1.0, c * s.powf(mf) - xi * s),
        0.0,
        l,
        &breaks,
        &opts,
    )?;
    Ok(r.value)
}

/// sup over ξ of |R̂_λ(ξ)|: coarse grid over the window where a stationary
/// point exists, then local refinement around the best cells.
pub fn sup_r_lambda_hat(lambda: f64, m: u32) -> Result<f64> {
    let hi = (m as f64) * 2f64.powi(m as i32) + 8.0;
    let lo = -8.0;
    let coarse: Vec<f64> = (0..=180)
        .map(|k| lo + (hi - lo) * k as f64 / 180.0)
        .collect();
    let vals: Vec<f64> = coarse
        .par_iter()
        .map(|&xi| r_lambda_hat(lambda, m, xi).map(|v| v.norm()))
        .collect::<Result<Vec<_>>>()?;
    let mut best: f64 = 0.0;
    let mut best_i = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v > best {
            best = v;
            best_i = i;
        }
    }
    // refine the winning cell down to the ξ-ripple scale π/|λ|
    let mut a = coarse[best_i.saturating_sub(1)];
    let mut b = coarse[(best_i + 1).min(coarse.len() - 1)];
    for _ in 0..3 {
        let step = ((b - a) / 24.0).max(0.25 * std::f64::consts::PI / lambda.abs());
        let mut local_best = best;
        let mut local_xi = 0.5 * (a + b);
        let mut xi = a;
        while xi <= b {
            let v = r_lambda_hat(lambda, m, xi)?.norm();
            if v > local_best {
                local_best = v;
                local_xi = xi;
            }
            xi += step;
        }
        best = local_best;
        a = local_xi - 2.0 * step;
        b = local_xi + 2.0 * step;
        if step <= 0.3 * std::f64::consts::PI / lambda.abs() {
            break;
        }
    }
    Ok(best)
}

/// One row of the van der Corput envelope sweep.
#[derive(Debug, Clone)]
pub struct VdcRow {
    pub lambda: f64,
    pub sup: f64,
    pub normalized: f64,
}

/// Sweep sup_ξ |R̂_λ| over a log-λ grid and fit the growth exponent; the
/// stationary-phase prediction is (m−1)/m.
pub fn vdc_sweep(m: u32, lambdas: &[f64]) -> Result<(Vec<VdcRow>, f64, f64)> {
    let rows: Vec<VdcRow> = lambdas
        .iter()
        .map(|&l| {
            let sup = sup_r_lambda_hat(l, m)?;
            Ok(VdcRow {
                lambda: l,
                sup,
                normalized: sup / l.powf((m as f64 - 1.0) / m as f64),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.lambda.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.sup.ln()).collect();
    let (slope, _, r2) = quad::fit_slope(&xs, &ys);
    Ok((rows, slope, r2))
}

/// One row of a uniform-bound sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub z: Complex64,
    pub n_moll: u32,
    pub index: Vec<u32>,
    pub lambda: f64,
    pub value_norm: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// Configuration of the μ uniform-bound sweep at Re z = −n.
#[derive(Debug, Clone)]
pub struct MuSweepConfig {
    pub gm: GraphMeasure,
    pub y_values: Vec<f64>,
    pub n_moll_values: Vec<u32>,
    pub alpha_budget: u32,
    pub lambdas: Vec<f64>,
}

/// Run the sweep; radial factors are cached per (j, α_j, λ) so the α-grid
/// assembly is arithmetic only. Returns the rows in deterministic order.
pub fn mu_uniform_bound_sweep(cfg: &MuSweepConfig, moll: &MollifierSpec) -> Result<Vec<SweepRow>> {
    let PhaseSpec::Quadratic { a } = &cfg.gm.phase else {
        return Err(Error::Domain(
            "μ sweep needs a quadratic-phase measure".into(),
        ));
    };
    let n = cfg.gm.n;
    let amax = cfg.alpha_budget;
    // cache[j][alpha][lambda_idx]
    let cache: Vec<Vec<Vec<Complex64>>> = (0..n)
        .map(|j| {
            (0..=amax)
                .into_par_iter()
                .map(|alpha| {
                    cfg.lambdas
                        .iter()
                        .map(|&l| radial_factor(alpha, l, a[j], &cfg.gm.cutoffs[j]).map(|p| p.0))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let eta_l1_prod: f64 = cfg
        .gm
        .cutoffs
        .iter()
        .map(|c| c.transform_l1().map(|p| p.0))
        .product::<Result<f64>>()?;
    let h_sup = moll.h_sup();
    let alphas = multi_indices(n, amax);
    let mut rows = Vec::new();
    for &y in &cfg.y_values {
        let z = Complex64::new(-(n as f64), y);
        let gamma_inv = recip_gamma((Complex64::new(1.0, 0.0) - z) * 0.5).norm();
        let bound = 2f64.powi(n as i32) * gamma_inv * h_sup * eta_l1_prod;
        for &nn in &cfg.n_moll_values {
            for (li, &lambda) in cfg.lambdas.iter().enumerate() {
                let pre = i_one_minus_z(z, lambda) * moll.phi_n(nn, lambda);
                for alpha in &alphas {
                    let mut v = pre;
                    for j in 0..n {
                        v *= cache[j][alpha.0[j] as usize][li];
                    }
                    let value_norm = v.norm();
                    rows.push(SweepRow {
                        z,
                        n_moll: nn,
                        index: alpha.0.clone(),
                        lambda,
                        value_norm,
                        bound,
                        ratio: value_norm / bound,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Configuration of the υ uniform-bound sweep at Re z = −(n + (1−m)/m).
#[derive(Debug, Clone)]
pub struct UpsilonSweepConfig {
    pub n: usize,
    pub m: u32,
    pub cutoff: CutoffSpec,
    pub y_values: Vec<f64>,
    pub n_moll_values: Vec<u32>,
    pub k_max: u32,
    pub lambdas: Vec<f64>,
    /// oscillatory-envelope constant sup_λ sup_ξ |R̂_λ| / |λ|^{(m−1)/m},
    /// measured by [`vdc_sweep`]; there is no closed form to pin it to.
    pub c_m: f64,
}

pub fn upsilon_uniform_bound_sweep(
    cfg: &UpsilonSweepConfig,
    moll: &MollifierSpec,
) -> Result<Vec<SweepRow>> {
    let n = cfg.n;
    let m = cfg.m;
    let re_z = -(n as f64 + (1.0 - m as f64) / m as f64);
    let (eta_l1, _) = cfg.cutoff.transform_l1()?;
    let h_sup = moll.h_sup();
    // I_n = ∫ dξ / (¼+ξ²)^{n/2}, finite for n ≥ 2
    let (i_n, _) = quad::integrate_real(
        |xi| (0.25 + xi * xi).powf(-(n as f64) / 2.0),
        -4000.0,
        4000.0,
        &QuadOpts::with_tol(1e-10, 1e-9),
    )?;
    let entries: Vec<(f64, u32, u32, f64)> = cfg
        .y_values
        .iter()
        .flat_map(|&y| {
            cfg.n_moll_values.iter().flat_map(move |&nn| {
                cfg.lambdas
                    .iter()
                    .flat_map(move |&l| (0..=cfg.k_max).map(move |k| (y, nn, k, l)))
            })
        })
        .collect();
    let rows: Vec<SweepRow> = entries
        .par_iter()
        .map(|&(y, nn, k, lambda)| {
            let z = Complex64::new(re_z, y);
            let e = upsilon_entry(z, nn, k, lambda, m, n, &cfg.cutoff, moll)?;
            let gamma_inv = recip_gamma((Complex64::new(1.0, 0.0) - z) * 0.5).norm();
            let bound = cfg.c_m * 2f64.powi(n as i32 - 1) * gamma_inv * h_sup * i_n * eta_l1;
            Ok(SweepRow {
                z,
                n_moll: nn,
                index: vec![k],
                lambda,
                value_norm: e.value.norm(),
                bound,
                ratio: e.value.norm() / bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows)
}

/// A poliradial kernel K(r₁..r_n, t) for the Plancherel check.
pub trait PoliradialKernel: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, r: &[f64], t: f64) -> f64;
    /// half-width beyond which K(·, t) is negligible
    fn t_halfwidth(&self) -> f64;
    /// radius beyond which K(r, ·) is negligible
    fn r_halfwidth(&self) -> f64;
}

/// Separable test kernel: radial profile times a time profile.
pub struct SeparableKernel<FR, FT>
where
    FR: Fn(&[f64]) -> f64 + Sync,
    FT: Fn(f64) -> f64 + Sync,
{
    pub n: usize,
    pub radial: FR,
    pub time: FT,
    pub t_half: f64,
    pub r_half: f64,
}

impl<FR, FT> PoliradialKernel for SeparableKernel<FR, FT>
where
    FR: Fn(&[f64]) -> f64 + Sync,
    FT: Fn(f64) -> f64 + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, r: &[f64], t: f64) -> f64 {
        (self.radial)(r) * (self.time)(t)
    }
    fn t_halfwidth(&self) -> f64 {
        self.t_half
    }
    fn r_halfwidth(&self) -> f64 {
        self.r_half
    }
}

/// Report of the Plancherel-ratio computation.
#[derive(Debug, Clone)]
pub struct PlancherelReport {
    pub ratio: f64,
    pub norm_sq: f64,
    pub entry_sum: f64,
    pub alpha_max_used: u32,
    pub tail_fraction: f64,
}

/// ‖K‖²_{L²(ℍⁿ)} / Σ_{|α| ≤ α_max} ∫ |μ_K(α,λ)|² |λ|ⁿ dλ for an n = 1
/// poliradial kernel, extending α_max until the top-order shell contributes
/// less than 0.5% of the running total.
pub fn plancherel_ratio<K: PoliradialKernel>(
    kernel: &K,
    alpha_start: u32,
    lambda_panels: usize,
) -> Result<PlancherelReport> {
    if kernel.dim() != 1 {
        return Err(Error::Domain(
            "the Plancherel check is wired for n = 1 kernels".into(),
        ));
    }
    let t_half = kernel.t_halfwidth();
    let r_half = kernel.r_halfwidth();
    let opts = QuadOpts::with_tol(1e-11, 1e-9);

    // ‖K‖² over ℝ²×ℝ = 2π ∫∫ |K(r,t)|² r dr dt
    let norm_sq = {
        let inner = |r: f64| {
            quad::integrate_real(|t| kernel.eval(&[r], t).powi(2), -t_half, t_half, &opts)
                .map(|p| p.0)
        };
        let (v, _) =
            quad::integrate_real(|r| inner(r).unwrap_or(f64::NAN) * r, 0.0, r_half, &opts)?;
        2.0 * std::f64::consts::PI * v
    };
    if !norm_sq.is_finite() {
        return Err(Error::Numeric("kernel norm quadrature failed".into()));
    }

    // λ grid: symmetric in sign for real kernels, composite GL on a
    // polynomially graded ladder up to where the t-transform has died off.
    let lambda_max = 24.0 / t_half.min(1.0) + 40.0;
    let (gl_nodes, gl_weights) = quad::gauss_legendre(10);
    let mut lam_nodes: Vec<(f64, f64)> = Vec::new();
    let mut lo = 0.0;
    for p in 0..lambda_panels {
        let hi = lambda_max * ((p + 1) as f64 / lambda_panels as f64).powi(3);
        for (x, w) in gl_nodes.iter().zip(gl_weights) {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            lam_nodes.push((mid + half * x, w * half));
        }
        lo = hi;
    }

    // radial quadrature nodes shared by every (α, λ)
    let r_panels = 48;
    let (rn, rw) = quad::gauss_legendre(12);
    let mut r_nodes: Vec<(f64, f64)> = Vec::new();
    for p in 0..r_panels {
        let a = r_half * p as f64 / r_panels as f64;
        let b = r_half * (p + 1) as f64 / r_panels as f64;
        for (x, w) in rn.iter().zip(rw) {
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            r_nodes.push((mid + half * x, w * half));
        }
    }

    // K^λ(r) = ∫ K(r,t) e^{iλt} dt on the node grid, per λ, fused with the
    // Laguerre weight r·e^{−λr²/4} and the r-quadrature weight.
    struct LamState {
        lam: f64,
        lam_w: f64,
        weighted: Vec<Complex64>,
        args: Vec<f64>,
        lag_prev: Vec<f64>,
        lag_cur: Vec<f64>,
    }
    let mut states: Vec<LamState> = lam_nodes
        .par_iter()
        .map(|&(lam, lam_w)| {
            let weighted = r_nodes
                .iter()
                .map(|&(r, rwgt)| {
                    let breaks =
                        quad::equal_phase_breaks(-t_half, t_half, 2.0 * lam * t_half, 10_000);
                    let kv = quad::integrate_complex_with_breaks(
                        |t| Complex64::from_polar(1.0, lam * t) * kernel.eval(&[r], t),
                        -t_half,
                        t_half,
                        &breaks,
                        &QuadOpts::with_tol(1e-11, 1e-9),
                    )?
                    .value;
                    Ok(kv * (r * rwgt))
                })
                .collect::<Result<Vec<_>>>()?;
            let args: Vec<f64> = r_nodes.iter().map(|&(r, _)| 0.5 * lam * r * r).collect();
            // damped Laguerre state M_α = L_α e^{−s/2}, advanced per shell
            let m0: Vec<f64> = args.iter().map(|&s| (-0.5 * s).exp()).collect();
            Ok(LamState {
                lam,
                lam_w,
                weighted,
                args,
                lag_prev: m0.clone(),
                lag_cur: m0,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // advance the Laguerre recurrence one order per shell; the shells decay
    // like α^{−2} near λ = 0, so the stopping rule watches the power-law
    // tail estimate shell·α rather than the shell alone
    let mut entry_sum = 0.0;
    let mut alpha = 0u32;
    loop {
        let shell: f64 = states
            .iter_mut()
            .map(|st| {
                let mut mu = Complex64::default();
                for i in 0..st.weighted.len() {
                    let l = if alpha == 0 {
                        st.lag_cur[i]
                    } else if alpha == 1 {
                        let v = (1.0 - st.args[i]) * st.lag_prev[i];
                        st.lag_cur[i] = v;
                        v
                    } else {
                        let af = alpha as f64;
                        let v = ((2.0 * af - 1.0 - st.args[i]) * st.lag_cur[i]
                            - (af - 1.0) * st.lag_prev[i])
                            / af;
                        st.lag_prev[i] = st.lag_cur[i];
                        st.lag_cur[i] = v;
                        v
                    };
                    mu += st.weighted[i] * l;
                }
                // ±λ contribute equally for real kernels
                2.0 * mu.norm_sqr() * st.lam * st.lam_w
            })
            .sum();
        entry_sum += shell;
        let tail_estimate = shell * alpha as f64;
        if alpha >= alpha_start.max(8) && tail_estimate <= 0.004 * (entry_sum + tail_estimate) {
            entry_sum += tail_estimate;
            return Ok(PlancherelReport {
                ratio: norm_sq / entry_sum,
                norm_sq,
                entry_sum,
                alpha_max_used: alpha,
                tail_fraction: tail_estimate / entry_sum,
            });
        }
        alpha += 1;
        if alpha > 4000 {
            return Err(Error::Accuracy {
                requested: 0.004,
                achieved: tail_estimate / entry_sum,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn multi_index_enumeration() {
        let idx = multi_indices(2, 3);
        assert_eq!(idx.len(), 10); // C(3+2,2)
        assert!(idx.iter().all(|a| a.order() <= 3));
        let idx1 = multi_indices(1, 30);
        assert_eq!(idx1.len(), 31);
    }

    #[test]
    fn radial_factor_gaussian_limit() {
        // a=0, α=0, large λ: cutoff ≈ 1 on the Gaussian scale, so the value
        // approaches ∫₀^∞ r e^{−λr²/4} dr = 2/λ.
        let cut = CutoffSpec::default();
        assert!(radial_factor(0, 0.0, 0.0, &cut).is_err());
        let (v, _) = radial_factor(0, 100.0, 0.0, &cut).unwrap();
        let exact = 2.0 / 100.0;
        assert!(
            (v.re - exact).abs() < 0.01 * exact && v.im.abs() < 1e-12,
            "{v} vs {exact}"
        );
    }

    #[test]
    fn radial_factor_routes_agree() {
        let cut = CutoffSpec::default();
        for alpha in [0u32, 1, 3, 5] {
            for &lambda in &[1.0, -1.0, 10.0, -10.0] {
                for &a in &[0.0, 1.0] {
                    let (d, _) = radial_factor(alpha, lambda, a, &cut).unwrap();
                    let (v, _) = radial_factor_conv(alpha, lambda, a, &cut).unwrap();
                    assert!(
                        (d - v).norm() <= 1e-6 * d.norm().max(1e-10),
                        "α={alpha} λ={lambda} a={a}: {d} vs {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn radial_factor_uniform_bound() {
        let cut = CutoffSpec::default();
        let (l1, _) = cut.transform_l1().unwrap();
        for alpha in [0u32, 2, 7, 15] {
            for &lambda in &[0.5, 3.0, 40.0, -12.0] {
                for &a in &[0.0, 0.7, -2.0] {
                    let (v, _) = radial_factor(alpha, lambda, a, &cut).unwrap();
                    let bound = 2.0 * l1 / lambda.abs();
                    assert!(v.norm() <= bound, "α={alpha} λ={lambda} a={a}");
                }
            }
        }
    }

    #[test]
    fn mu_entry_assembles_from_factors() {
        let moll = MollifierSpec::global();
        let gm = GraphMeasure::quadratic(vec![0.0]).unwrap();
        let z = c(-1.0, 0.0);
        let alpha = MultiIndex(vec![0]);
        let e = mu_entry(z, 1, &alpha, 4.0, &gm, moll).unwrap();
        let (rf, _) = radial_factor(0, 4.0, 0.0, &gm.cutoffs[0]).unwrap();
        let manual = i_one_minus_z(z, 4.0) * moll.phi_n(1, 4.0) * rf;
        assert!((e.value - manual).norm() <= 1e-12 * manual.norm());
        assert!(e.error >= 0.0);
    }

    #[test]
    fn mu_conjugation_symmetry_in_lambda() {
        let moll = MollifierSpec::global();
        let gm = GraphMeasure::quadratic(vec![1.0]).unwrap();
        let z = c(-1.0, 0.0); // real z
        for alpha in [0u32, 2] {
            for &lambda in &[0.7, 5.0] {
                let p = mu_entry(z, 2, &MultiIndex(vec![alpha]), lambda, &gm, moll).unwrap();
                let q = mu_entry(z, 2, &MultiIndex(vec![alpha]), -lambda, &gm, moll).unwrap();
                assert!(
                    (p.value - q.value.conj()).norm() <= 1e-9 * p.value.norm().max(1e-14),
                    "α={alpha} λ={lambda}: {} vs conj {}",
                    p.value,
                    q.value
                );
            }
        }
    }

    #[test]
    fn mu_entry_vanishes_at_z_equal_one() {
        // 1/Γ((1−z)/2) = 1/Γ(0) = 0 handles the z = 1 edge by continuity
        let moll = MollifierSpec::global();
        let gm = GraphMeasure::quadratic(vec![1.0]).unwrap();
        let e = mu_entry(c(1.0, 0.0), 1, &MultiIndex(vec![1]), 2.0, &gm, moll).unwrap();
        assert_eq!(e.value, Complex64::default());
    }

    #[test]
    fn upsilon_matches_mu_at_n1_m1() {
        let moll = MollifierSpec::global();
        let gm = GraphMeasure::quadratic(vec![1.0]).unwrap();
        let z = c(-0.5, 0.3);
        for k in [0u32, 1, 4] {
            for &lambda in &[1.5, -3.0] {
                let u = upsilon_entry(z, 2, k, lambda, 1, 1, &gm.cutoffs[0], moll).unwrap();
                let m = mu_entry(z, 2, &MultiIndex(vec![k]), lambda, &gm, moll).unwrap();
                assert!(
                    (u.value - m.value).norm() <= 1e-9 * m.value.norm().max(1e-14),
                    "k={k} λ={lambda}: {} vs {}",
                    u.value,
                    m.value
                );
            }
        }
    }

    #[test]
    fn r_hat_small_lambda_and_triangle_bound() {
        // small |λ|: the phase stays near zero over (0,|λ|), so R̂(0) ≈ |λ|
        let v = r_lambda_hat(0.05, 2, 0.0).unwrap();
        assert!((v.re - 0.05).abs() < 0.002 && v.im.abs() < 0.02);
        // |R̂_λ(ξ)| ≤ |λ| always
        for &xi in &[-3.0, 0.0, 2.0, 9.0] {
            let v = r_lambda_hat(1.0, 2, xi).unwrap();
            assert!(v.norm() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn vdc_slope_m2_quick() {
        let lambdas = [4.0, 16.0, 64.0, 256.0];
        let (rows, slope, r2) = vdc_sweep(2, &lambdas).unwrap();
        assert!((slope - 0.5).abs() < 0.08, "slope {slope}");
        assert!(r2 > 0.98, "r2 {r2}");
        let max_norm = rows.iter().map(|r| r.normalized).fold(0.0f64, f64::max);
        let min_norm = rows.iter().map(|r| r.normalized).fold(f64::MAX, f64::min);
        assert!(max_norm / min_norm < 2.0, "normalized spread too wide");
    }

    #[test]
    fn plancherel_ratio_is_stable_across_kernels() {
        let k1 = SeparableKernel {
            n: 1,
            radial: |r: &[f64]| (-r[0] * r[0]).exp(),
            time: |t: f64| (-t * t).exp(),
            t_half: 7.0,
            r_half: 7.0,
        };
        let k2 = SeparableKernel {
            n: 1,
            radial: |r: &[f64]| (-2.5 * r[0] * r[0]).exp() * (1.0 + r[0] * r[0]),
            time: |t: f64| (-0.7 * t * t).exp(),
            t_half: 9.0,
            r_half: 7.0,
        };
        let r1 = plancherel_ratio(&k1, 2, 24).unwrap();
        let r2 = plancherel_ratio(&k2, 2, 24).unwrap();
        assert!(
            (r1.ratio - r2.ratio).abs() <= 0.02 * r1.ratio,
            "{} vs {}",
            r1.ratio,
            r2.ratio
        );
        // scaling the kernel by 3 scales both sides by 9
        let k3 = SeparableKernel {
            n: 1,
            radial: |r: &[f64]| 3.0 * (-r[0] * r[0]).exp(),
            time: |t: f64| (-t * t).exp(),
            t_half: 7.0,
            r_half: 7.0,
        };
        let r3 = plancherel_ratio(&k3, 2, 24).unwrap();
        assert!((r3.ratio - r1.ratio).abs() <= 1e-6 * r1.ratio);
        assert!((r3.norm_sq - 9.0 * r1.norm_sq).abs() <= 1e-6 * r3.norm_sq);
    }
}
