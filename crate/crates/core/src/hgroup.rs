//! Arithmetic on the Heisenberg group ℍⁿ realized as ℝ^{2n} × ℝ with the
//! twisted product (x,t)·(y,s) = (x+y, t+s+½W(x,y)).
//!
//! Coordinates are kept in the real realization; the complex identification
//! ℝ^{2n} ≅ ℂⁿ pairs coordinate j with coordinate n+j and is never needed at
//! runtime. Everything here is pure and allocation-light.

use crate::error::{Error, Result};

/// A point (x, t) of ℍⁿ; `x.len() == 2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HPoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl HPoint {
    pub fn new(x: Vec<f64>, t: f64) -> Result<Self> {
        if x.is_empty() || !x.len().is_multiple_of(2) {
            return Err(Error::Dimension {
                expected: 2 * x.len().div_ceil(2).max(1),
                found: x.len(),
            });
        }
        if !t.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("HPoint coordinates must be finite".into()));
        }
        Ok(Self { x, t })
    }

    /// Neutral element of ℍⁿ.
    pub fn identity(n: usize) -> Self {
        Self {
            x: vec![0.0; 2 * n],
            t: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len() / 2
    }
}

/// Symplectic form W(x,y) = Σ_j (y_{n+j} x_j − y_j x_{n+j}).
pub fn symplectic_form(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || !x.len().is_multiple_of(2) || x.is_empty() {
        return Err(Error::Dimension {
            expected: x.len(),
            found: y.len(),
        });
    }
    let n = x.len() / 2;
    let mut w = 0.0;
    for j in 0..n {
        w += y[n + j] * x[j] - y[j] * x[n + j];
    }
    Ok(w)
}

/// Group product (x,t)·(y,s) = (x+y, t+s+½W(x,y)).
pub fn group_mul(p: &HPoint, q: &HPoint) -> Result<HPoint> {
    let w = symplectic_form(&p.x, &q.x)?;
    let x = p.x.iter().zip(&q.x).map(|(a, b)| a + b).collect();
    Ok(HPoint {
        x,
        t: p.t + q.t + 0.5 * w,
    })
}

/// Group inverse (x,t)⁻¹ = (−x,−t).
pub fn group_inv(p: &HPoint) -> HPoint {
    HPoint {
        x: p.x.iter().map(|v| -v).collect(),
        t: -p.t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::SmallRng;
    use rand::{Rng, SeedableRng};

    fn rand_point(rng: &mut SmallRng, n: usize) -> HPoint {
        let x = (0..2 * n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        HPoint::new(x, rng.gen_range(-5.0..5.0)).unwrap()
    }

    #[test]
    fn symplectic_hand_values() {
        // n=1: single cross term
        assert_eq!(symplectic_form(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        // brute-force oracle for the 4-term sum at n=2
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [5.0, 6.0, 7.0, 8.0];
        let mut brute = 0.0;
        let n = 2;
        for j in 0..n {
            brute += y[n + j] * x[j] - y[j] * x[n + j];
        }
        assert_eq!(brute, -16.0);
        assert_eq!(symplectic_form(&x, &y).unwrap(), -16.0);
    }

    #[test]
    fn symplectic_antisymmetry_and_bilinearity() {
        let mut rng = SmallRng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..4usize);
            let x: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let z: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let wxy = symplectic_form(&x, &y).unwrap();
            let wyx = symplectic_form(&y, &x).unwrap();
            assert!((wxy + wyx).abs() < 1e-12);
            assert!(symplectic_form(&x, &x).unwrap().abs() < 1e-12);
            let comb: Vec<f64> = y.iter().zip(&z).map(|(u, v)| a * u + b * v).collect();
            let lhs = symplectic_form(&x, &comb).unwrap();
            let rhs = a * wxy + b * symplectic_form(&x, &z).unwrap();
            assert!((lhs - rhs).abs() < 1e-11);
        }
    }

    #[test]
    fn group_axioms() {
        let mut rng = SmallRng::seed_from_u64(42);
        for _ in 0..1000 {
            let n = rng.gen_range(1..3usize);
            let p = rand_point(&mut rng, n);
            let q = rand_point(&mut rng, n);
            let r = rand_point(&mut rng, n);

            let e = HPoint::identity(n);
            assert_eq!(group_mul(&p, &e).unwrap(), p);
            assert_eq!(group_mul(&e, &p).unwrap(), p);

            let pinv = group_inv(&p);
            let prod = group_mul(&p, &pinv).unwrap();
            assert!(prod.x.iter().all(|v| v.abs() < 1e-12) && prod.t.abs() < 1e-12);
            assert_eq!(group_inv(&group_inv(&p)), p);

            let lhs = group_mul(&group_mul(&p, &q).unwrap(), &r).unwrap();
            let rhs = group_mul(&p, &group_mul(&q, &r).unwrap()).unwrap();
            let scale: f64 = lhs
                .x
                .iter()
                .map(|v| v.abs())
                .fold(lhs.t.abs().max(1.0), f64::max);
            for (a, b) in lhs.x.iter().zip(&rhs.x) {
                assert!((a - b).abs() <= 1e-12 * scale);
            }
            assert!((lhs.t - rhs.t).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn noncommutativity_witness() {
        let e1 = HPoint::new(vec![1.0, 0.0], 0.0).unwrap();
        let e2 = HPoint::new(vec![0.0, 1.0], 0.0).unwrap();
        let a = group_mul(&e1, &e2).unwrap();
        let b = group_mul(&e2, &e1).unwrap();
        assert_eq!(a.x, vec![1.0, 1.0]);
        assert_eq!(a.t, 0.5);
        assert_eq!(b.t, -0.5);
    }

    #[test]
    fn inverse_is_sign_flip() {
        let p = HPoint::new(vec![1.0, 0.0], 3.0).unwrap();
        let q = group_inv(&p);
        assert_eq!(q.x, vec![-1.0, -0.0]);
        assert_eq!(q.t, -3.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(symplectic_form(&[1.0, 0.0], &[1.0, 0.0, 0.0, 0.0]).is_err());
        let p = HPoint::new(vec![1.0, 0.0], 0.0).unwrap();
        let q = HPoint::new(vec![1.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        assert!(group_mul(&p, &q).is_err());
    }
}
