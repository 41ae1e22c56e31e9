//! The analytic family of smoothed fractional kernels.
//!
//! `I_z(s) = 2^{−z/2} Γ(z/2)^{−1} |s|^{z−1}` is convolved on ℝ against the
//! band-limited approximate identity `φ̂_N` built from a Schwartz function H
//! with `supp Ĥ ⊆ (−1,1)` and `∫Ĥ = 1`. The convolution against the graph
//! measure then collapses to a closed form,
//! `(ν ∗ J_{N,z})(x,σ) = η(x) · (I_z ∗ φ̂_N)(σ − φ(x))`,
//! which is what [`nu_conv_j`] evaluates.
//!
//! Two evaluation routes are kept for the 1-D smoothed kernel and checked
//! against each other:
//!
//! * space side — the convolution integral itself, valid for Re z > 0, and
//!   by analytic continuation for every z once |s| clears the support of
//!   φ̂_N (the integrand is then entire in z);
//! * frequency side — the inverse transform of ξ ↦ Î_z(ξ)·(φ̂_N)^(ξ), valid
//!   for Re z < 1.
//!
//! Under the crate's transform convention the exact identity is
//! `Î_z = √(2π) · I_{1−z}`; the √(2π) is carried explicitly so the two
//! routes agree to quadrature accuracy rather than up to a constant.

use crate::error::{Error, Result};
use crate::measures::{CutoffSpec, GraphMeasure};
use crate::quad::{self, QuadOpts};
use crate::specfun::recip_gamma;
use num_complex::Complex64;
use std::sync::OnceLock;

pub const SQRT_TWO_PI: f64 = 2.5066282746310007;

/// |s|^w for s > 0 as a complex power (principal branch on the positive axis).
fn pos_pow(s: f64, w: Complex64) -> Complex64 {
    debug_assert!(s > 0.0);
    (w * s.ln()).exp()
}

/// 2^{−z/2} / Γ(z/2); entire in z, vanishes for z ∈ −2ℕ₀.
pub fn iz_prefactor(z: Complex64) -> Complex64 {
    (-z * 0.5 * std::f64::consts::LN_2).exp() * recip_gamma(z * 0.5)
}

/// I_z(s) for Re z > 0, s ≠ 0.
pub fn i_z_eval(z: Complex64, s: f64) -> Result<Complex64> {
    if z.re <= 0.0 {
        return Err(Error::Domain(format!(
            "I_z as a function needs Re z > 0 (got {z}); use the smoothed kernel instead"
        )));
    }
    if s == 0.0 {
        return Err(Error::Domain("I_z(s) is singular at s = 0".into()));
    }
    Ok(iz_prefactor(z) * pos_pow(s.abs(), z - 1.0))
}

/// The mollifier pair (H, φ_N): Ĥ is the measures bump rescaled to support
/// (−1, 1) and normalized to unit integral; H and its first two derivatives
/// are cached on a uniform grid by inverse-transform quadrature.
#[derive(Debug)]
pub struct MollifierSpec {
    shape: CutoffSpec,
    normalization: f64,
    grid_step: f64,
    grid_range: f64,
    tables: OnceLock<HTables>,
}

#[derive(Debug)]
struct HTables {
    h: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    h_sup: f64,
}

impl Default for MollifierSpec {
    fn default() -> Self {
        // H decays like exp(−c√t) with c ≈ 1.3; 720 puts the tail near 1e−14
        Self::new(0.05, 720.0)
    }
}

static GLOBAL_MOLLIFIER: OnceLock<MollifierSpec> = OnceLock::new();

impl MollifierSpec {
    pub fn new(grid_step: f64, grid_range: f64) -> Self {
        let shape = CutoffSpec::new(0.5, 1.0).expect("canonical mollifier shape");
        // ∫ bump_{(1/2,1)} = 2·(1/2 + 1/2·1/2) = 3/2 exactly, by the
        // symmetry g(u) + g(1−u) = 1 of the transition profile.
        Self {
            shape,
            normalization: 1.5,
            grid_step,
            grid_range,
            tables: OnceLock::new(),
        }
    }

    /// Shared default instance (the tables are expensive to build).
    pub fn global() -> &'static MollifierSpec {
        GLOBAL_MOLLIFIER.get_or_init(MollifierSpec::default)
    }

    /// Ĥ(ξ): even, smooth, supported in (−1, 1), unit integral.
    pub fn h_hat(&self, xi: f64) -> f64 {
        self.shape.eval(xi) / self.normalization
    }

    /// (Ĥ, Ĥ′, Ĥ″)(ξ).
    pub fn h_hat_with_derivs(&self, xi: f64) -> (f64, f64, f64) {
        let (v, d1, d2) = self.shape.eval_with_derivs(xi);
        let c = 1.0 / self.normalization;
        (v * c, d1 * c, d2 * c)
    }

    fn tables(&self) -> &HTables {
        self.tables.get_or_init(|| self.build_tables())
    }

    fn build_tables(&self) -> HTables {
        let count = (self.grid_range / self.grid_step).ceil() as usize + 1;
        let opts = QuadOpts::with_tol(1e-13, 1e-12);
        let mut h = Vec::with_capacity(count);
        let mut h1 = Vec::with_capacity(count);
        let mut h2 = Vec::with_capacity(count);
        for k in 0..count {
            let t = k as f64 * self.grid_step;
            let breaks = quad::equal_phase_breaks(0.0, 1.0, t, 4096);
            // pack H and −H″ into one complex pass, H′ into a second
            let pair = quad::integrate_complex_with_breaks(
                |xi| {
                    let hh = self.h_hat(xi);
                    let c = (t * xi).cos();
                    Complex64::new(hh * c, xi * xi * hh * c)
                },
                0.0,
                1.0,
                &breaks,
                &opts,
            )
            .expect("mollifier table quadrature");
            let odd = quad::integrate_complex_with_breaks(
                |xi| Complex64::new(xi * self.h_hat(xi) * (t * xi).sin(), 0.0),
                0.0,
                1.0,
                &breaks,
                &opts,
            )
            .expect("mollifier table quadrature");
            h.push(pair.value.re / std::f64::consts::PI);
            h2.push(-pair.value.im / std::f64::consts::PI);
            h1.push(-odd.value.re / std::f64::consts::PI);
        }
        let h_sup = h[0];
        HTables { h, h1, h2, h_sup }
    }

    fn table_lookup(&self, values: &[f64], t: f64, parity: f64) -> f64 {
        let x = t.abs() / self.grid_step;
        let i = x.floor() as usize;
        if i + 3 >= values.len() {
            return 0.0;
        }
        let frac = x - i as f64;
        // negative indices mirror with the parity of the tabulated function
        let grab = |k: i64| {
            if k < 0 {
                parity * values[(-k) as usize]
            } else {
                values[k as usize]
            }
        };
        let p = [
            grab(i as i64 - 2),
            grab(i as i64 - 1),
            grab(i as i64),
            grab(i as i64 + 1),
            grab(i as i64 + 2),
            grab(i as i64 + 3),
        ];
        quad::lagrange6_uniform(&p, frac)
    }

    /// H(t) = (2π)^{−1} ∫ Ĥ(ξ) e^{itξ} dξ, from the cached table.
    pub fn h_value(&self, t: f64) -> f64 {
        self.table_lookup(&self.tables().h, t, 1.0)
    }

    /// H′(t); odd in t.
    pub fn h_deriv1(&self, t: f64) -> f64 {
        let v = self.table_lookup(&self.tables().h1, t, -1.0);
        if t < 0.0 {
            -v
        } else {
            v
        }
    }

    /// H″(t); even in t.
    pub fn h_deriv2(&self, t: f64) -> f64 {
        self.table_lookup(&self.tables().h2, t, 1.0)
    }

    /// ‖H‖_∞ = H(0) (Ĥ ≥ 0 makes 0 the maximizer).
    pub fn h_sup(&self) -> f64 {
        self.tables().h_sup
    }

    /// Where the cached H table ends; |H| is at the numerical floor there.
    pub fn h_range(&self) -> f64 {
        self.grid_range
    }

    /// φ_N(λ) = H(λ/N).
    pub fn phi_n(&self, n_moll: u32, lambda: f64) -> f64 {
        self.h_value(lambda / n_moll as f64)
    }

    /// φ̂_N(s) = N Ĥ(N s); supported in |s| < 1/N.
    pub fn phi_hat_n(&self, n_moll: u32, s: f64) -> f64 {
        let nf = n_moll as f64;
        nf * self.h_hat(nf * s)
    }
}

/// φ_N(λ) = H(λ/N), the diagonal mollifier factor.
pub fn mollifier_value(spec: &MollifierSpec, n_moll: u32, lambda: f64) -> Result<f64> {
    if n_moll < 1 {
        return Err(Error::Range("mollifier index N must be ≥ 1".into()));
    }
    Ok(spec.phi_n(n_moll, lambda))
}

/// Which route evaluates the smoothed kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalRoute {
    Auto,
    SpaceSide,
    FrequencySide,
}

/// The 1-D smoothed kernel (I_z ∗ φ̂_N) with its interpolation parameter and
/// mollifier index.
#[derive(Debug, Clone)]
pub struct SmoothedKernel {
    pub z: Complex64,
    pub n_moll: u32,
    pub route: EvalRoute,
}

impl SmoothedKernel {
    pub fn new(z: Complex64, n_moll: u32) -> Result<Self> {
        if z.re > 1.0 {
            return Err(Error::Domain(format!(
                "smoothed kernel strip requires Re z ≤ 1, got {z}"
            )));
        }
        if n_moll < 1 {
            return Err(Error::Range("mollifier index N must be ≥ 1".into()));
        }
        Ok(Self {
            z,
            n_moll,
            route: EvalRoute::Auto,
        })
    }

    pub fn with_route(mut self, route: EvalRoute) -> Self {
        self.route = route;
        self
    }

    /// (I_z ∗ φ̂_N)(s).
    pub fn eval(&self, moll: &MollifierSpec, s: f64) -> Result<Complex64> {
        let inv_n = 1.0 / self.n_moll as f64;
        match self.route {
            EvalRoute::SpaceSide => self.eval_space(moll, s),
            EvalRoute::FrequencySide => self.eval_freq(moll, s),
            EvalRoute::Auto => {
                if self.z.re > 0.0 || s.abs() > 1.05 * inv_n {
                    self.eval_space(moll, s)
                } else {
                    self.eval_freq(moll, s)
                }
            }
        }
    }

    /// Convolution integral over supp φ̂_N = (−1/N, 1/N). Direct for
    /// Re z > 0; for Re z ≤ 0 it is the analytic continuation in z, valid
    /// whenever the singular point u = s lies outside the support.
    fn eval_space(&self, moll: &MollifierSpec, s: f64) -> Result<Complex64> {
        let z = self.z;
        let nf = self.n_moll as f64;
        let inv_n = 1.0 / nf;
        let c_z = iz_prefactor(z);
        if s.abs() > inv_n {
            // integrand smooth in u; entire in z
            let opts = QuadOpts::with_tol(1e-13, 1e-11);
            let r = quad::integrate_complex(
                |u| pos_pow((s - u).abs(), z - 1.0) * moll.phi_hat_n(self.n_moll, u),
                -inv_n,
                inv_n,
                &opts,
            )?;
            return Ok(c_z * r.value);
        }
        if z.re <= 0.0 {
            return Err(Error::Domain(format!(
                "space-side route needs Re z > 0 inside supp φ̂_N (z = {z}, s = {s})"
            )));
        }
        // split at the singular point u = s; each side is ∫ v^{z−1} g(v) dv
        let g_plus = |v: f64| {
            let u = nf * (s + v);
            let (h0, h1, h2) = moll.h_hat_with_derivs(u);
            (nf * h0, nf * nf * h1, nf * nf * nf * h2)
        };
        let g_minus = |v: f64| {
            let u = nf * (s - v);
            let (h0, h1, h2) = moll.h_hat_with_derivs(u);
            (nf * h0, -nf * nf * h1, nf * nf * nf * h2)
        };
        let right = power_cell(z - 1.0, inv_n - s, &g_plus)?;
        let left = power_cell(z - 1.0, inv_n + s, &g_minus)?;
        Ok(c_z * (right + left))
    }

    /// Inverse transform of Î_z · (φ̂_N)^ with Î_z = √(2π) I_{1−z}:
    /// √(2π) C_{1−z} ∫ |ξ|^{−z} H(ξ/N) e^{isξ} dξ.
    fn eval_freq(&self, moll: &MollifierSpec, s: f64) -> Result<Complex64> {
        let z = self.z;
        if z.re >= 1.0 {
            if z.im == 0.0 && z.re == 1.0 {
                // Î_1 = √(2π) δ acting on H(·/N) e^{is·}
                return Ok(Complex64::new(SQRT_TWO_PI * moll.h_sup(), 0.0));
            }
            return Err(Error::Domain(format!(
                "frequency-side route needs Re z < 1, got {z}"
            )));
        }
        let nf = self.n_moll as f64;
        let xi_max = nf * moll.h_range();
        let c = SQRT_TWO_PI * iz_prefactor(1.0 - z);
        // even combination of ±ξ: ∫_0^Ξ v^{−z} · 2 H(v/N) cos(sv) dv
        let eps = 0.5f64
            .min(0.25 * nf)
            .min(std::f64::consts::FRAC_PI_2 / (1.0 + s.abs()));
        let q = |v: f64| {
            let h0 = moll.h_value(v / nf);
            let h1 = moll.h_deriv1(v / nf);
            let h2 = moll.h_deriv2(v / nf);
            let (c0, s0) = ((s * v).cos(), (s * v).sin());
            (
                2.0 * h0 * c0,
                2.0 * (h1 / nf * c0 - h0 * s * s0),
                2.0 * (h2 / (nf * nf) * c0 - 2.0 * h1 / nf * s * s0 - h0 * s * s * c0),
            )
        };
        let inner = power_cell(-z, eps, &q)?;
        let mut breaks = quad::equal_phase_breaks(eps, xi_max, s.abs() * (xi_max - eps), 400_000);
        // geometric refinement near the power-law end
        let mut v = eps;
        for _ in 0..10 {
            v *= 2.0;
            if v < xi_max {
                breaks.push(v);
            }
        }
        let opts = QuadOpts {
            tol_abs: 1e-12,
            tol_rel: 1e-10,
            max_cells: 600_000,
        };
        let outer = quad::integrate_complex_with_breaks(
            |v| pos_pow(v, -z) * (2.0 * moll.h_value(v / nf) * (s * v).cos()),
            eps,
            xi_max,
            &breaks,
            &opts,
        )?;
        Ok(c * (inner + outer.value))
    }
}

/// ∫_0^L v^μ g(v) dv for Re μ > −1 via two integrations by parts, using the
/// analytic derivatives of g; the remainder has a C¹ integrand.
fn power_cell<G: Fn(f64) -> (f64, f64, f64)>(mu: Complex64, len: f64, g: &G) -> Result<Complex64> {
    if len <= 0.0 {
        return Ok(Complex64::default());
    }
    let m1 = mu + 1.0;
    let m2 = mu + 2.0;
    let (gl, gl1, _) = g(len);
    let boundary = pos_pow(len, m1) / m1 * gl - pos_pow(len, m2) / (m1 * m2) * gl1;
    let mut breaks = Vec::new();
    let mut v = len;
    for _ in 0..24 {
        v *= 0.5;
        breaks.push(v);
    }
    let opts = QuadOpts {
        tol_abs: 1e-13,
        tol_rel: 1e-10,
        max_cells: 200_000,
    };
    let rem =
        quad::integrate_complex_with_breaks(|v| pos_pow(v, m2) * g(v).2, 0.0, len, &breaks, &opts)?;
    Ok(boundary + rem.value / (m1 * m2))
}

/// Closed form of the measure convolved against the smoothed kernel:
/// (ν ∗ J_{N,z})(x, σ) = η(x) (I_z ∗ φ̂_N)(σ − φ(x)).
pub fn nu_conv_j(
    gm: &GraphMeasure,
    spec: &SmoothedKernel,
    moll: &MollifierSpec,
    x: &[f64],
    sigma: f64,
) -> Result<Complex64> {
    let eta = gm.density(x);
    if eta == 0.0 {
        return Ok(Complex64::default());
    }
    let phase = gm.phase_at(x)?;
    Ok(spec.eval(moll, sigma - phase)? * eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn i_z_pointwise() {
        // z=2: 2^{-1}/Γ(1)·|s| → 3/2 at s=3
        let v = i_z_eval(c(2.0, 0.0), 3.0).unwrap();
        assert!((v - 1.5).norm() < 1e-14);
        // z=1: constant 2^{-1/2}/√π = (2π)^{-1/2}
        for &s in &[0.2, -5.0, 11.0] {
            let v = i_z_eval(c(1.0, 0.0), s).unwrap();
            assert!((v.re - 1.0 / SQRT_TWO_PI).abs() < 1e-14 && v.im == 0.0);
        }
        let a = i_z_eval(c(0.7, 0.3), 2.0).unwrap();
        let b = i_z_eval(c(0.7, 0.3), -2.0).unwrap();
        assert_eq!(a, b);
        assert!(i_z_eval(c(-0.5, 0.0), 1.0).is_err());
        assert!(i_z_eval(c(1.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn h_hat_normalization_and_support() {
        let m = MollifierSpec::global();
        let (mass, _) = quad::integrate_real(
            |xi| m.h_hat(xi),
            -1.0,
            1.0,
            &QuadOpts::with_tol(1e-12, 1e-11),
        )
        .unwrap();
        assert!((mass - 1.0).abs() < 1e-10, "∫Ĥ = {mass}");
        assert_eq!(m.h_hat(1.0), 0.0);
        assert_eq!(m.h_hat(-1.2), 0.0);
        assert!(m.h_hat(0.3) > 0.0);
    }

    #[test]
    fn h_tables_match_direct_quadrature() {
        let m = MollifierSpec::global();
        for &t in &[0.0, 0.31, 2.7, 10.3, 55.5] {
            let direct = quad::integrate_real(
                |xi| m.h_hat(xi) * (t * xi).cos(),
                0.0,
                1.0,
                &QuadOpts::with_tol(1e-13, 1e-12),
            )
            .unwrap()
            .0 / std::f64::consts::PI;
            let table = m.h_value(t);
            assert!(
                (direct - table).abs() < 1e-10,
                "H({t}): {direct} vs {table}"
            );
        }
        // derivative tables against finite differences of the value table
        let h = 1e-4;
        for &t in &[0.4, 3.3, 12.0] {
            let fd1 = (m.h_value(t + h) - m.h_value(t - h)) / (2.0 * h);
            assert!((fd1 - m.h_deriv1(t)).abs() < 1e-6);
            let fd2 = (m.h_value(t + h) - 2.0 * m.h_value(t) + m.h_value(t - h)) / (h * h);
            assert!((fd2 - m.h_deriv2(t)).abs() < 1e-4);
        }
    }

    #[test]
    fn mollifier_examples() {
        let m = MollifierSpec::global();
        // H(0) = (2π)^{-1}∫Ĥ = 1/(2π)
        let h0 = mollifier_value(m, 1, 0.0).unwrap();
        assert!((h0 - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-10);
        assert!((m.h_sup() - h0).abs() < 1e-14);
        // sup over a λ grid stays below ‖H‖_∞
        for k in 0..2000 {
            let lam = -40.0 + 0.04 * k as f64;
            assert!(mollifier_value(m, 3, lam).unwrap().abs() <= m.h_sup() + 1e-12);
        }
        // scaling identity φ_N(λ) = φ_{2N}(2λ)
        for &lam in &[0.3, 1.7, -4.4] {
            let a = mollifier_value(m, 2, lam).unwrap();
            let b = mollifier_value(m, 4, 2.0 * lam).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn smoothed_kernel_at_z0_is_phi_hat() {
        // I_0 = δ under this convention, so (I_0 ∗ φ̂_N)(s) = φ̂_N(s); the
        // observed proportionality constant is recorded as ≈ 1.
        let m = MollifierSpec::global();
        let k = SmoothedKernel::new(c(0.0, 0.0), 4)
            .unwrap()
            .with_route(EvalRoute::FrequencySide);
        let mut worst: f64 = 0.0;
        for &s in &[0.0, 0.05, 0.11, 0.2] {
            let v = k.eval(m, s).unwrap();
            let reference = m.phi_hat_n(4, s);
            if reference.abs() > 1e-6 {
                worst = worst.max((v.re / reference - 1.0).abs().max(v.im.abs()));
            }
        }
        assert!(worst < 1e-6, "I_0 ∗ φ̂_N deviates from φ̂_N by {worst}");
    }

    #[test]
    fn space_and_frequency_routes_agree() {
        let m = MollifierSpec::global();
        for &(re, im) in &[(0.5, 0.0), (0.25, 0.0), (0.9, 0.0), (0.5, 1.0)] {
            let z = c(re, im);
            let space = SmoothedKernel::new(z, 4)
                .unwrap()
                .with_route(EvalRoute::SpaceSide);
            let freq = SmoothedKernel::new(z, 4)
                .unwrap()
                .with_route(EvalRoute::FrequencySide);
            for &s in &[0.0, 0.1, -0.21, 0.9, 3.0] {
                let a = space.eval(m, s).unwrap();
                let b = freq.eval(m, s).unwrap();
                assert!(
                    (a - b).norm() <= 1e-6 * a.norm().max(1e-9),
                    "z={z}, s={s}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn z1_distributional_value_matches_space_route() {
        let m = MollifierSpec::global();
        let space = SmoothedKernel::new(c(1.0, 0.0), 2)
            .unwrap()
            .with_route(EvalRoute::SpaceSide);
        let freq = SmoothedKernel::new(c(1.0, 0.0), 2)
            .unwrap()
            .with_route(EvalRoute::FrequencySide);
        for &s in &[0.0, 0.4, 7.0] {
            let a = space.eval(m, s).unwrap();
            let b = freq.eval(m, s).unwrap();
            // space side is constant (2π)^{-1/2}·∫φ̂_N = (2π)^{-1/2}
            assert!((a.re - 1.0 / SQRT_TWO_PI).abs() < 1e-9, "s={s}: {a}");
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn negative_even_z_annihilates_off_support() {
        // I_z = c δ^{(2k)} for z ∈ −2ℕ₀: off supp φ̂_N the kernel vanishes,
        // and that is automatic because the prefactor 1/Γ(z/2) is zero.
        let m = MollifierSpec::global();
        for &zre in &[-2.0, -4.0] {
            let k = SmoothedKernel::new(c(zre, 0.0), 4).unwrap();
            for &s in &[0.5, 1.5, 30.0] {
                let v = k.eval(m, s).unwrap();
                assert_eq!(v, Complex64::default(), "z={zre}, s={s}");
            }
        }
    }

    #[test]
    fn decay_envelope_at_negative_z() {
        let m = MollifierSpec::global();
        for &n_moll in &[1u32, 4] {
            let k = SmoothedKernel::new(c(-1.0, 0.0), n_moll).unwrap();
            let nf = n_moll as f64;
            let mut ratios = Vec::new();
            let mut s = (nf + 1.0) / nf;
            while s <= 100.0 {
                let v = k.eval(m, s).unwrap().norm();
                let w = (s - 1.0 / nf).powi(2);
                ratios.push(v * w);
                s *= 1.9;
            }
            let max = ratios.iter().cloned().fold(0.0, f64::max);
            assert!(max.is_finite() && max > 0.0);
            // no growth trend towards large |s|
            let last = *ratios.last().unwrap();
            assert!(last <= 2.0 * ratios[0].max(ratios[1]), "ratios {ratios:?}");
        }
    }

    #[test]
    fn continuation_agrees_with_frequency_route_past_the_support_edge() {
        // For Re z ≤ 0 and |s| > 1/N the space integral is entire in z and
        // must reproduce the frequency-side analytic continuation.
        let m = MollifierSpec::global();
        for &(re, im) in &[(-0.7, 0.4), (-1.0, 0.0), (-1.5, 2.0)] {
            let z = c(re, im);
            let freq = SmoothedKernel::new(z, 2)
                .unwrap()
                .with_route(EvalRoute::FrequencySide);
            let space = SmoothedKernel::new(z, 2)
                .unwrap()
                .with_route(EvalRoute::SpaceSide);
            for &s in &[0.51, 0.7, 2.3] {
                let a = freq.eval(m, s).unwrap();
                let b = space.eval(m, s).unwrap();
                assert!(
                    (a - b).norm() < 1e-7 * a.norm().max(1e-12),
                    "z={z}, s={s}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn nu_conv_j_is_lp_finite_at_negative_z() {
        // ∫∫ |ν∗J|^p factorizes into ∫η^p · ∫|I_z∗φ̂_N|^p; the s-integral
        // converges because of the |s−sgn(s)/N|^{−2} decay
        let m = MollifierSpec::global();
        let gm = GraphMeasure::quadratic(vec![1.0]).unwrap();
        let k = SmoothedKernel::new(c(-1.0, 0.0), 4).unwrap();
        let opts = QuadOpts::with_tol(1e-8, 1e-7);
        let inner = |x0: f64| {
            quad::integrate_real(|x1| gm.density(&[x0, x1]), -1.5, 1.5, &opts)
                .unwrap()
                .0
        };
        for p in [1.0, 2.0] {
            let (eta_p, _) = quad::integrate_real(
                |x0| {
                    quad::integrate_real(|x1| gm.density(&[x0, x1]).powf(p), -1.5, 1.5, &opts)
                        .unwrap()
                        .0
                },
                -1.5,
                1.5,
                &opts,
            )
            .unwrap();
            let s_cut = 60.0;
            let (body, _) = quad::integrate_real(
                |s| k.eval(m, s).unwrap().norm().powf(p),
                -s_cut,
                s_cut,
                &QuadOpts::with_tol(1e-7, 1e-6),
            )
            .unwrap();
            // tail bound from the decay envelope c·|s|^{−2}
            let c_env = k.eval(m, s_cut).unwrap().norm() * (s_cut - 0.25).powi(2);
            let tail = 2.0 * c_env.powf(p) / ((2.0 * p - 1.0) * s_cut.powf(2.0 * p - 1.0));
            let total = eta_p * (body + tail);
            assert!(
                total.is_finite() && total > 0.0,
                "p={p}: ‖ν∗J‖_p^p = {total}"
            );
        }
        let _ = inner;
    }

    #[test]
    fn nu_conv_j_factorizes() {
        let m = MollifierSpec::global();
        let gm = GraphMeasure::quadratic(vec![1.0]).unwrap();
        let k = SmoothedKernel::new(c(0.5, 0.0), 4).unwrap();
        // outside the cutoff support the value is exactly zero
        assert_eq!(
            nu_conv_j(&gm, &k, m, &[1.5, 0.0], 0.3).unwrap(),
            Complex64::default()
        );
        // on the plateau at x=0 the value is the 1-D kernel at σ
        let v = nu_conv_j(&gm, &k, m, &[0.0, 0.0], 0.17).unwrap();
        let d = k.eval(m, 0.17).unwrap();
        assert!((v - d).norm() < 1e-12);
        // varying σ at fixed x retraces the 1-D kernel shifted by φ(x)
        let x = [0.9, 0.4];
        let eta = gm.density(&x);
        let phi = gm.phase_at(&x).unwrap();
        for &sigma in &[0.0, 0.4, 1.3] {
            let v = nu_conv_j(&gm, &k, m, &x, sigma).unwrap();
            let expect = k.eval(m, sigma - phi).unwrap() * eta;
            assert!((v - expect).norm() < 1e-12);
        }
    }
}
