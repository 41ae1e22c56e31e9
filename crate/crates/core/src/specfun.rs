//! Special functions: complex Gamma, generalized Laguerre polynomials, the
//! family F_{n,k}(σ) = χ_{(0,∞)} L_k^{n−1}(σ) e^{−σ/2} σ^{n−1}, its closed
//! form Fourier transform, and the adaptive transform oracle the closed form
//! is checked against.
//!
//! Transform convention throughout: ĝ(ξ) = ∫ g(σ) e^{−iσξ} dσ.

use crate::error::{Error, Result};
use crate::quad::{self, QuadOpts};
use num_complex::Complex64;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_P: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_right_half(z: Complex64) -> Complex64 {
    // valid for Re(z) ≥ 0.5
    let z = z - 1.0;
    let mut t = Complex64::new(LANCZOS_P[0], 0.0);
    for (i, p) in LANCZOS_P.iter().enumerate().skip(1) {
        t += p / (z + i as f64);
    }
    let w = z + LANCZOS_G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * w.powc(z + 0.5) * (-w).exp() * t
}

fn is_nonpositive_integer(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0
}

/// Γ(z) by Lanczos approximation with the reflection formula on Re(z) < ½.
pub fn gamma_complex(z: Complex64) -> Result<Complex64> {
    if is_nonpositive_integer(z) {
        return Err(Error::Pole { z });
    }
    if z.re >= 0.5 {
        Ok(lanczos_right_half(z))
    } else {
        // Γ(z) Γ(1−z) = π / sin(πz)
        let s = (std::f64::consts::PI * z).sin();
        Ok(std::f64::consts::PI / (s * lanczos_right_half(1.0 - z)))
    }
}

/// 1/Γ(z); entire, zero exactly at the poles of Γ.
pub fn recip_gamma(z: Complex64) -> Complex64 {
    if is_nonpositive_integer(z) {
        return Complex64::new(0.0, 0.0);
    }
    if z.re >= 0.5 {
        1.0 / lanczos_right_half(z)
    } else {
        (std::f64::consts::PI * z).sin() * lanczos_right_half(1.0 - z) / std::f64::consts::PI
    }
}

/// ln Γ(x) for real x > 0 (overflow-free route for factorial ratios).
pub fn ln_gamma_real(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x >= 0.5 {
        let z = x - 1.0;
        let mut t = LANCZOS_P[0];
        for (i, p) in LANCZOS_P.iter().enumerate().skip(1) {
            t += p / (z + i as f64);
        }
        let w = z + LANCZOS_G + 0.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * w.ln() - w + t.ln()
    } else {
        std::f64::consts::PI.ln() - (std::f64::consts::PI * x).sin().ln() - ln_gamma_real(1.0 - x)
    }
}

/// Generalized Laguerre polynomial L_k^a(s) by the three-term recurrence.
pub fn laguerre(k: u32, a: u32, s: f64) -> f64 {
    let a = a as f64;
    if k == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0;
    let mut l = 1.0 + a - s;
    for j in 2..=k {
        let j = j as f64;
        let next = ((2.0 * j - 1.0 + a - s) * l - (j - 1.0 + a) * lm1) / j;
        lm1 = l;
        l = next;
    }
    l
}

/// L_k^a(s)·e^{−s/2}, carried in damped form through the recurrence so the
/// product never overflows even where L_k alone would.
pub fn laguerre_damped(k: u32, a: u32, s: f64) -> f64 {
    let d = (-0.5 * s).exp();
    let a = a as f64;
    if k == 0 {
        return d;
    }
    let mut lm1 = d;
    let mut l = (1.0 + a - s) * d;
    for j in 2..=k {
        let j = j as f64;
        let next = ((2.0 * j - 1.0 + a - s) * l - (j - 1.0 + a) * lm1) / j;
        lm1 = l;
        l = next;
    }
    l
}

/// L_k^a(s) by the explicit binomial sum; test oracle for the recurrence.
pub fn laguerre_sum(k: u32, a: u32, s: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..=k {
        // binom(k+a, k-i) (−s)^i / i!
        let mut term = 1.0;
        for j in 1..=i {
            term *= -s / j as f64;
        }
        let mut binom = 1.0;
        for j in 0..(k - i) {
            binom *= (k as f64 + a as f64 - j as f64) / (k as f64 - i as f64 - j as f64);
        }
        total += binom * term;
    }
    total
}

/// F_{n,k}(σ) = χ_{(0,∞)}(σ) L_k^{n−1}(σ) e^{−σ/2} σ^{n−1}.
pub fn f_nk(n: u32, k: u32, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    laguerre(k, n - 1, sigma) * (-sigma / 2.0).exp() * sigma.powi(n as i32 - 1)
}

/// (k+n−1)!/k!, as a float; `Range` error on overflow.
fn factorial_ratio(n: u32, k: u32) -> Result<f64> {
    if k + n - 1 <= 170 {
        let mut r = 1.0;
        for i in 1..n {
            r *= (k + i) as f64;
        }
        Ok(r)
    } else {
        let r = (ln_gamma_real((k + n) as f64) - ln_gamma_real((k + 1) as f64)).exp();
        if r.is_finite() {
            Ok(r)
        } else {
            Err(Error::Range(format!(
                "factorial ratio ({}+{}−1)!/{}! overflows",
                k, n, k
            )))
        }
    }
}

/// Closed-form F̂_{n,k}(ξ) = ((k+n−1)!/k!) (−½+iξ)^k / (½+iξ)^{k+n}.
///
/// Both complex powers share the modulus (¼+ξ²)^{1/2}, so the quotient is
/// evaluated in polar form: modulus (¼+ξ²)^{−n/2}, argument k·arg(−½+iξ) −
/// (k+n)·arg(½+iξ). This stays exact in magnitude for large k where the
/// cartesian powers would lose digits.
pub fn f_nk_hat(n: u32, k: u32, xi: f64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::Range("f_nk_hat requires n ≥ 1".into()));
    }
    let ratio = factorial_ratio(n, k)?;
    let r2 = 0.25 + xi * xi;
    let modulus = ratio * r2.powf(-(n as f64) / 2.0);
    let th1 = xi.atan2(-0.5);
    let th2 = xi.atan2(0.5);
    let phase = k as f64 * th1 - (k + n) as f64 * th2;
    Ok(Complex64::from_polar(modulus, phase))
}

/// |F̂_{n,k}(ξ)| in closed form: ((k+n−1)!/k!)(¼+ξ²)^{−n/2}.
pub fn f_nk_hat_modulus(n: u32, k: u32, xi: f64) -> Result<f64> {
    Ok(factorial_ratio(n, k)? * (0.25 + xi * xi).powf(-(n as f64) / 2.0))
}

/// Adaptive estimate of ∫ f(σ) e^{−iσξ} dσ over `domain` to absolute
/// tolerance `tol`.
pub fn fourier_quadrature<F: Fn(f64) -> f64>(
    f: F,
    xi: f64,
    domain: (f64, f64),
    tol: f64,
) -> Result<Complex64> {
    fourier_quadrature_complex(|s| Complex64::new(f(s), 0.0), xi, domain, tol)
}

/// Complex-integrand variant of [`fourier_quadrature`].
pub fn fourier_quadrature_complex<F: Fn(f64) -> Complex64>(
    f: F,
    xi: f64,
    domain: (f64, f64),
    tol: f64,
) -> Result<Complex64> {
    let (a, b) = domain;
    let breaks = quad::equal_phase_breaks(a, b, xi * (b - a), 200_000);
    let opts = QuadOpts {
        tol_abs: tol,
        tol_rel: 0.0,
        max_cells: 400_000,
    };
    let r = quad::integrate_complex_with_breaks(
        |s| f(s) * Complex64::from_polar(1.0, -s * xi),
        a,
        b,
        &breaks,
        &opts,
    )?;
    Ok(r.value)
}

/// Truncation point where the F_{n,k} envelope has decayed below 1e−15.
pub fn f_nk_domain(n: u32, k: u32) -> (f64, f64) {
    (0.0, 8.0 * (k + n) as f64 + 96.0)
}
