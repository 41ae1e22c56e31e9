//! Type-set geometry and the desk-scale experiments probing it.
//!
//! The (1/p, 1/q) square carries three constraint lines for the graph
//! measure: the diagonal 1/q ≤ 1/p, the scaling line 1/q ≥ (2n+1)/p − 2n,
//! and its dual 1/q ≥ 1/((2n+1)p). The admissible region is the closed
//! triangle with vertices (0,0), (1,1) and C_n = ((2n+1)/(2n+2), 1/(2n+2)).
//!
//! Two numerical probes are wired to those lines:
//!
//! * a scaling ladder: f_δ = χ_{B(2δ)}, the operator applied on the slab
//!   A_δ = {x ∈ D, |t − φ(x)| ≤ δ/4}, and the log-log slope of
//!   ‖T_ν f_δ‖_{L^q(A_δ)}/‖f_δ‖_p against δ compared with
//!   2n + 1/q − (2n+1)/p (negative slope ⟹ the point is outside);
//! * a nonlinear power iteration alternating T_ν and T*_ν through the
//!   Lᵖ/Lᵠ duality maps, yielding certified lower bounds on the
//!   discretized operator norm.

use crate::convolve::{Grid, QuadratureSpec, SampledField, TNuOperator};
use crate::error::{Error, Result};
use crate::measures::GraphMeasure;
use crate::quad;
use serde::{Deserialize, Serialize};

/// A point (1/p, 1/q) of the type square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypePoint {
    pub ip: f64,
    pub iq: f64,
}

impl TypePoint {
    pub fn new(ip: f64, iq: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&ip) || !(0.0..=1.0).contains(&iq) {
            return Err(Error::Range(format!(
                "type point ({ip}, {iq}) must lie in the unit square"
            )));
        }
        Ok(Self { ip, iq })
    }

    /// The duality reflection (1/p, 1/q) ↦ (1 − 1/q, 1 − 1/p).
    pub fn reflected(&self) -> TypePoint {
        TypePoint {
            ip: 1.0 - self.iq,
            iq: 1.0 - self.ip,
        }
    }
}

/// Closed triangle in the type square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub a: TypePoint,
    pub b: TypePoint,
    pub c: TypePoint,
}

fn cross(o: TypePoint, u: TypePoint, v: TypePoint) -> f64 {
    (u.ip - o.ip) * (v.iq - o.iq) - (u.iq - o.iq) * (v.ip - o.ip)
}

impl Triangle {
    pub fn new(a: TypePoint, b: TypePoint, c: TypePoint) -> Result<Self> {
        if cross(a, b, c).abs() < 1e-15 {
            return Err(Error::Domain("degenerate triangle".into()));
        }
        Ok(Self { a, b, c })
    }

    /// Closed-triangle membership with tolerance 1e−12.
    pub fn contains(&self, pt: TypePoint) -> bool {
        let orient = cross(self.a, self.b, self.c).signum();
        let tol = 1e-12;
        let d1 = orient * cross(self.a, self.b, pt);
        let d2 = orient * cross(self.b, self.c, pt);
        let d3 = orient * cross(self.c, self.a, pt);
        d1 >= -tol && d2 >= -tol && d3 >= -tol
    }
}

/// The triangle with vertices (0,0), (1,1), ((2n+1)/(2n+2), 1/(2n+2)).
pub fn thm1_triangle(n: usize) -> Result<Triangle> {
    if n < 1 {
        return Err(Error::Range("dimension n must be ≥ 1".into()));
    }
    let d = (2 * n + 2) as f64;
    Triangle::new(
        TypePoint { ip: 0.0, iq: 0.0 },
        TypePoint { ip: 1.0, iq: 1.0 },
        TypePoint {
            ip: (2 * n + 1) as f64 / d,
            iq: 1.0 / d,
        },
    )
}

/// The power-phase vertex ((2(1+mn)−m)/(2(1+mn)), m/(2(1+mn))).
pub fn thm2_vertex(n: usize, m: u32) -> Result<TypePoint> {
    if n < 2 || m < 2 {
        return Err(Error::Range(
            "the power-phase triangle needs n ≥ 2 and m ≥ 2".into(),
        ));
    }
    let d = 2.0 * (1.0 + (m as f64) * (n as f64));
    TypePoint::new((d - m as f64) / d, m as f64 / d)
}

/// Triangle spanned by (0,0), (1,1) and the power-phase vertex.
pub fn thm2_triangle(n: usize, m: u32) -> Result<Triangle> {
    Triangle::new(
        TypePoint { ip: 0.0, iq: 0.0 },
        TypePoint { ip: 1.0, iq: 1.0 },
        thm2_vertex(n, m)?,
    )
}

/// The slope the ladder should produce at (1/p, 1/q): 2n + 1/q − (2n+1)/p.
pub fn predicted_exponent(n: usize, pt: TypePoint) -> f64 {
    2.0 * n as f64 + pt.iq - (2 * n + 1) as f64 * pt.ip
}

/// Shrink radius δ/(4n(1+‖∇φ‖_∞ on supp η)) of the inner set F_{δ,x}; the
/// gradient sup is measured per phase rather than fixed by formula.
pub fn inner_set_radius(gm: &GraphMeasure, delta: f64) -> f64 {
    delta / (4.0 * gm.n as f64 * (1.0 + gm.grad_phase_sup()))
}

/// Decreasing δ ladder with its per-δ grid refinement (cells per δ).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingLadder {
    pub deltas: Vec<f64>,
    /// f_δ grid spacing is δ / cells_per_delta (≥ 4 keeps δ resolvable)
    pub cells_per_delta: usize,
}

impl Default for ScalingLadder {
    fn default() -> Self {
        Self {
            deltas: vec![0.25, 0.125, 0.0625, 0.03125],
            cells_per_delta: 4,
        }
    }
}

impl ScalingLadder {
    pub fn validate(&self) -> Result<()> {
        if self.deltas.len() < 2 {
            return Err(Error::Config("ladder needs at least two δ values".into()));
        }
        if !self
            .deltas
            .windows(2)
            .all(|w| w[0] > w[1] && w[1] > 0.0 && w[0] < 1.0)
        {
            return Err(Error::Config(
                "δ values must be strictly decreasing in (0,1)".into(),
            ));
        }
        if self.cells_per_delta < 4 {
            return Err(Error::Resolution(
                "smallest δ must span at least 4 grid cells per axis".into(),
            ));
        }
        Ok(())
    }
}

/// Sampling policy for the A_δ slabs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalingContext {
    /// x-grid points per axis over the unit ball D
    pub x_samples_per_axis: usize,
    /// t samples across the δ/2-thick slab (≥ 4)
    pub t_samples: usize,
    pub quad: QuadratureSpec,
}

impl Default for ScalingContext {
    fn default() -> Self {
        Self {
            x_samples_per_axis: 17,
            t_samples: 5,
            quad: QuadratureSpec::default(),
        }
    }
}

impl ScalingContext {
    pub fn validate(&self) -> Result<()> {
        if self.t_samples < 4 {
            return Err(Error::Config("need at least 4 t samples in A_δ".into()));
        }
        if self.x_samples_per_axis < 5 {
            return Err(Error::Config("need at least 5 x samples per axis".into()));
        }
        self.quad.validate()
    }
}

/// Operator values on one rung of the ladder.
#[derive(Debug, Clone)]
pub struct DeltaSample {
    pub delta: f64,
    /// T f_δ at the A_δ sample points
    pub values: Vec<f64>,
    /// sampling weights, summing to |A_δ|
    pub weights: Vec<f64>,
    /// measured support volume of the sampled f_δ (‖f_δ‖_p = vol^{1/p})
    pub f_volume: f64,
    /// inf over A_δ of T f_δ / δ^{2n}
    pub inf_normalized: f64,
    /// fraction of quadrature reads outside the f_δ box (zero extension)
    pub coverage_outside: f64,
}

/// Operator samples across the whole ladder; independent of (p, q).
#[derive(Debug, Clone)]
pub struct LadderData {
    pub n: usize,
    pub adjoint: bool,
    pub rungs: Vec<DeltaSample>,
}

/// Run the ladder for T_ν (or T*_ν) once; every (p,q) readout reuses it.
pub fn run_ladder(
    gm: &GraphMeasure,
    ladder: &ScalingLadder,
    ctx: &ScalingContext,
    adjoint: bool,
) -> Result<LadderData> {
    ladder.validate()?;
    ctx.validate()?;
    let n = gm.n;
    let dw = 2 * n;
    // x sample grid over the unit ball, fixed across the ladder
    let nx = ctx.x_samples_per_axis;
    let step = 2.0 / (nx - 1) as f64;
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut idx = vec![0usize; dw];
    'outer: loop {
        let x: Vec<f64> = idx.iter().map(|&k| -1.0 + step * k as f64).collect();
        if x.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            xs.push(x);
        }
        for k in (0..dw).rev() {
            idx[k] += 1;
            if idx[k] < nx {
                continue 'outer;
            }
            idx[k] = 0;
            if k == 0 {
                break 'outer;
            }
        }
    }
    if xs.is_empty() {
        return Err(Error::Resolution(
            "no x samples inside the unit ball".into(),
        ));
    }
    let x_cell = step.powi(dw as i32);
    let op = TNuOperator::new(gm.clone(), ctx.quad)?;

    let mut rungs = Vec::new();
    for &delta in &ladder.deltas {
        // f_δ on its own box, spacing δ/cells so the ladder is self-similar
        let h = delta / ladder.cells_per_delta as f64;
        let half = 2.0 * delta + 2.0 * h;
        let pts = (2.0 * half / h).round() as usize + 1;
        let grid = Grid::new(n, vec![half; dw + 1], vec![pts; dw + 1])?;
        let rsq = 4.0 * delta * delta;
        let f_delta = SampledField::from_fn(grid, move |p| {
            if p.iter().map(|v| v * v).sum::<f64>() <= rsq {
                1.0
            } else {
                0.0
            }
        });
        let f_volume = f_delta.lp_norm(1.0)?;

        // A_δ sample points: t spans [φ(x) − δ/4, φ(x) + δ/4] (the adjoint
        // slab sits at −φ(x); φ is even so the geometry is mirrored)
        let nt = ctx.t_samples;
        let mut points = Vec::with_capacity(xs.len() * nt);
        let mut weights = Vec::with_capacity(xs.len() * nt);
        for x in &xs {
            let phi = gm.phase_at(x)?;
            let center = if adjoint { -phi } else { phi };
            for k in 0..nt {
                let t = center - 0.25 * delta + 0.5 * delta * (k as f64 + 0.5) / nt as f64;
                points.push((x.clone(), t));
                weights.push(x_cell * 0.5 * delta / nt as f64);
            }
        }
        let values = if adjoint {
            op.adjoint_at(&f_delta, &points)?
        } else {
            op.forward_at(&f_delta, &points)?
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("ladder produced non-finite values".into()));
        }
        let inf_normalized = values
            .iter()
            .fold(f64::MAX, |m, &v| m.min(v / delta.powi(dw as i32)));
        rungs.push(DeltaSample {
            delta,
            values,
            weights,
            f_volume,
            inf_normalized,
            coverage_outside: 0.0,
        });
    }
    Ok(LadderData { n, adjoint, rungs })
}

/// Per-(1/p, 1/q) record of one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanResult {
    pub point: TypePoint,
    pub fitted: f64,
    pub predicted: f64,
    pub r2: f64,
    pub norm_lower_bound: Option<f64>,
    pub inside_thm1: bool,
    pub inside_thm2: Option<bool>,
    /// spread of the per-δ infimum of T f_δ / δ^{2n} across the ladder
    pub inf_min: f64,
    pub inf_max: f64,
}

/// Read one (p, q) off precomputed ladder data.
pub fn evaluate_ladder_at(pt: TypePoint, data: &LadderData) -> Result<(f64, f64, f64, f64)> {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut inf_min = f64::MAX;
    let mut inf_max = f64::MIN;
    for rung in &data.rungs {
        // ‖T f_δ‖_{L^q(A_δ)} with the exact |A_δ| weights; q = ∞ is the sup
        let qnorm = if pt.iq == 0.0 {
            rung.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        } else {
            let q = 1.0 / pt.iq;
            let sum: f64 = rung
                .values
                .iter()
                .zip(&rung.weights)
                .map(|(v, w)| v.abs().powf(q) * w)
                .sum();
            sum.powf(pt.iq)
        };
        // ‖f_δ‖_p for the sampled indicator is vol^{1/p}; p = ∞ gives 1
        let pnorm = rung.f_volume.powf(pt.ip);
        if qnorm <= 0.0 || pnorm <= 0.0 {
            return Err(Error::Numeric("degenerate ladder norms".into()));
        }
        lx.push(rung.delta.ln());
        ly.push((qnorm / pnorm).ln());
        inf_min = inf_min.min(rung.inf_normalized);
        inf_max = inf_max.max(rung.inf_normalized);
    }
    let (slope, _, r2) = quad::fit_slope(&lx, &ly);
    if !slope.is_finite() {
        return Err(Error::Numeric("slope fit failed".into()));
    }
    Ok((slope, r2, inf_min, inf_max))
}

/// The scaling-ladder experiment at one type point.
pub fn scaling_experiment(
    pt: TypePoint,
    gm: &GraphMeasure,
    ladder: &ScalingLadder,
    ctx: &ScalingContext,
) -> Result<ScanResult> {
    let data = run_ladder(gm, ladder, ctx, false)?;
    let (fitted, r2, inf_min, inf_max) = evaluate_ladder_at(pt, &data)?;
    let tri = thm1_triangle(gm.n)?;
    Ok(ScanResult {
        point: pt,
        fitted,
        predicted: predicted_exponent(gm.n, pt),
        r2,
        norm_lower_bound: None,
        inside_thm1: tri.contains(pt),
        inside_thm2: None,
        inf_min,
        inf_max,
    })
}

/// The dual experiment: run the adjoint ladder at the reflected point
/// (1−1/q, 1−1/p), probing the necessary line 1/q ≥ 1/((2n+1)p).
pub fn dual_scaling_experiment(
    pt: TypePoint,
    gm: &GraphMeasure,
    ladder: &ScalingLadder,
    ctx: &ScalingContext,
) -> Result<ScanResult> {
    let data = run_ladder(gm, ladder, ctx, true)?;
    let refl = pt.reflected();
    let (fitted, r2, inf_min, inf_max) = evaluate_ladder_at(refl, &data)?;
    let tri = thm1_triangle(gm.n)?;
    Ok(ScanResult {
        point: pt,
        fitted,
        predicted: predicted_exponent(gm.n, refl),
        r2,
        norm_lower_bound: None,
        inside_thm1: tri.contains(pt),
        inside_thm2: None,
        inf_min,
        inf_max,
    })
}

/// Certified lower bounds on ‖T‖_{p→q} of a discretized linear operator by
/// the nonlinear power iteration through the duality maps; returns the best
/// bound seen. Needs 1 < p, q < ∞.
pub fn power_lower_bound<F, A>(
    forward: F,
    adjoint: A,
    grid: &Grid,
    p: f64,
    q: f64,
    iterations: usize,
) -> Result<f64>
where
    F: Fn(&SampledField) -> Result<SampledField>,
    A: Fn(&SampledField) -> Result<SampledField>,
{
    if !(p > 1.0 && p.is_finite() && q > 1.0 && q.is_finite()) {
        return Err(Error::Domain(
            "the norm estimator needs 1 < p, q < ∞ (duality maps degenerate otherwise)".into(),
        ));
    }
    let mut f = SampledField::from_fn(grid.clone(), |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-0.5 * r2).exp()
    });
    let np = f.lp_norm(p)?;
    f.values.iter_mut().for_each(|v| *v /= np);
    let mut best: f64 = 0.0;
    for _ in 0..iterations {
        let u = forward(&f)?;
        let bound = u.lp_norm(q)?;
        if !bound.is_finite() {
            return Err(Error::Numeric("norm iteration diverged".into()));
        }
        best = best.max(bound);
        // duality map into L^{q'}: |u|^{q−1} sgn(u), then pull back
        let mut v = u;
        v.values
            .iter_mut()
            .for_each(|y| *y = y.abs().powf(q - 1.0) * y.signum());
        let w = adjoint(&v)?;
        let mut next = w;
        next.values
            .iter_mut()
            .for_each(|y| *y = y.abs().powf(1.0 / (p - 1.0)) * y.signum());
        let norm = next.lp_norm(p)?;
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numeric("norm iteration collapsed".into()));
        }
        next.values.iter_mut().for_each(|y| *y /= norm);
        f = next;
    }
    Ok(best)
}

/// ‖T_ν‖_{p→q} lower bound on the given grid.
pub fn pq_norm_lower_bound(
    pt: TypePoint,
    gm: &GraphMeasure,
    grid: &Grid,
    quad_spec: &QuadratureSpec,
    iterations: usize,
) -> Result<f64> {
    if pt.ip <= 0.0 || pt.ip >= 1.0 || pt.iq <= 0.0 || pt.iq >= 1.0 {
        return Err(Error::Domain(
            "the norm estimator needs 1 < p, q < ∞ (duality maps degenerate otherwise)".into(),
        ));
    }
    let op = TNuOperator::new(gm.clone(), *quad_spec)?;
    power_lower_bound(
        |f| op.forward(f).map(|o| o.field),
        |g| op.adjoint(g).map(|o| o.field),
        grid,
        1.0 / pt.ip,
        1.0 / pt.iq,
        iterations,
    )
}

/// Scan driver: one primal ladder, one dual ladder, per-point readouts and
/// (where defined) norm lower bounds. Per-point failures are recorded, not
/// fatal.
/// Per-point outcome: the readout or the error message that produced none.
pub type PointOutcome = std::result::Result<ScanResult, String>;

#[allow(clippy::too_many_arguments)]
pub fn scan(
    points: &[TypePoint],
    gm: &GraphMeasure,
    ladder: &ScalingLadder,
    ctx: &ScalingContext,
    norm_grid: Option<&Grid>,
    norm_iterations: usize,
) -> Result<(Vec<PointOutcome>, Vec<PointOutcome>)> {
    let primal = run_ladder(gm, ladder, ctx, false)?;
    let dual = run_ladder(gm, ladder, ctx, true)?;
    let tri1 = thm1_triangle(gm.n)?;
    let tri2 = match &gm.phase {
        crate::measures::PhaseSpec::Power { m } if gm.n >= 2 && *m >= 2 => {
            Some(thm2_triangle(gm.n, *m)?)
        }
        _ => None,
    };
    let mut primal_rows = Vec::new();
    let mut dual_rows = Vec::new();
    for &pt in points {
        let primal_row = evaluate_ladder_at(pt, &primal).map(|(fitted, r2, i0, i1)| {
            let norm_lower_bound = norm_grid.and_then(|grid| {
                pq_norm_lower_bound(pt, gm, grid, &ctx.quad, norm_iterations).ok()
            });
            ScanResult {
                point: pt,
                fitted,
                predicted: predicted_exponent(gm.n, pt),
                r2,
                norm_lower_bound,
                inside_thm1: tri1.contains(pt),
                inside_thm2: tri2.as_ref().map(|t| t.contains(pt)),
                inf_min: i0,
                inf_max: i1,
            }
        });
        primal_rows.push(primal_row.map_err(|e| e.to_string()));
        let refl = pt.reflected();
        let dual_row = evaluate_ladder_at(refl, &dual).map(|(fitted, r2, i0, i1)| ScanResult {
            point: pt,
            fitted,
            predicted: predicted_exponent(gm.n, refl),
            r2,
            norm_lower_bound: None,
            inside_thm1: tri1.contains(pt),
            inside_thm2: tri2.as_ref().map(|t| t.contains(pt)),
            inf_min: i0,
            inf_max: i1,
        });
        dual_rows.push(dual_row.map_err(|e| e.to_string()));
    }
    Ok((primal_rows, dual_rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolve::InterpOrder;

    fn pt(ip: f64, iq: f64) -> TypePoint {
        TypePoint::new(ip, iq).unwrap()
    }

    #[test]
    fn triangle_vertices_and_membership() {
        let t1 = thm1_triangle(1).unwrap();
        assert!((t1.c.ip - 0.75).abs() < 1e-15 && (t1.c.iq - 0.25).abs() < 1e-15);
        let t2 = thm1_triangle(2).unwrap();
        assert!((t2.c.ip - 5.0 / 6.0).abs() < 1e-15 && (t2.c.iq - 1.0 / 6.0).abs() < 1e-15);
        assert!(t1.contains(pt(0.0, 0.0)));
        assert!(t1.contains(pt(0.5, 0.5))); // diagonal edge midpoint
        assert!(t1.contains(t1.c));
        assert!(!t1.contains(pt(1.0, 0.0)));
        assert!(!t1.contains(pt(0.2, 0.6))); // above the diagonal
    }

    #[test]
    fn thm1_vertex_boundary_identities() {
        for n in 1..=4usize {
            let c = thm1_triangle(n).unwrap().c;
            // on the scaling line 1/q = (2n+1)/p − 2n
            let line = (2 * n + 1) as f64 * c.ip - 2.0 * n as f64;
            assert!((c.iq - line).abs() <= 1e-12, "n={n}");
            // self-dual: (1 − iq, 1 − ip) = C
            let r = c.reflected();
            assert!((r.ip - c.ip).abs() <= 1e-12 && (r.iq - c.iq).abs() <= 1e-12);
            // C is also on the dual line 1/q = (1/p)/(2n+1)
            assert!((c.iq - c.ip / (2 * n + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn thm2_vertex_values() {
        let v = thm2_vertex(2, 2).unwrap();
        assert!((v.ip - 0.8).abs() < 1e-15 && (v.iq - 0.2).abs() < 1e-15);
        // lies on the duality line iq = 1 − ip
        for (n, m) in [(2usize, 2u32), (2, 5), (3, 2), (4, 7)] {
            let v = thm2_vertex(n, m).unwrap();
            assert!((v.ip + v.iq - 1.0).abs() < 1e-15);
        }
        // m → ∞ tends to (1 − 1/(2n), 1/(2n))
        let v = thm2_vertex(2, 4000).unwrap();
        assert!((v.iq - 0.25).abs() < 1e-3);
        assert!(thm2_vertex(1, 2).is_err());
    }

    #[test]
    fn predicted_exponent_reference_values() {
        // n=1 boundary algebra
        assert!((predicted_exponent(1, pt(0.75, 0.25)) - 0.0).abs() < 1e-14);
        assert!((predicted_exponent(1, pt(1.0, 0.0)) + 1.0).abs() < 1e-14);
        assert!((predicted_exponent(1, pt(1.0, 1.0)) - 0.0).abs() < 1e-14);
        // dual probe of the line 1/q = 1/((2n+1)p): reflected points land on
        // the scaling line, so the dual prediction vanishes there
        let on_dual_line = pt(0.6, 0.2);
        assert!((predicted_exponent(1, on_dual_line.reflected()) - 0.0).abs() < 1e-14);
    }

    #[test]
    fn shrink_radius_scales_with_delta() {
        let gm = GraphMeasure::quadratic(vec![1.0]).unwrap();
        let r1 = inner_set_radius(&gm, 0.25);
        let r2 = inner_set_radius(&gm, 0.125);
        assert!((r1 / r2 - 2.0).abs() < 1e-12);
        assert!(r1 > 0.0 && r1 < 0.25);
    }

    #[test]
    fn ladder_validation() {
        let bad = ScalingLadder {
            deltas: vec![0.1, 0.2],
            cells_per_delta: 4,
        };
        assert!(bad.validate().is_err());
        let unresolvable = ScalingLadder {
            deltas: vec![0.25, 0.125],
            cells_per_delta: 2,
        };
        assert!(matches!(unresolvable.validate(), Err(Error::Resolution(_))));
        assert!(ScalingLadder::default().validate().is_ok());
    }

    fn quick_ctx() -> ScalingContext {
        ScalingContext {
            x_samples_per_axis: 9,
            t_samples: 4,
            quad: QuadratureSpec {
                nodes_per_axis: 10,
                interp: InterpOrder::Linear,
                mode: crate::convolve::WQuadMode::Tensor,
            },
        }
    }

    fn quick_ladder() -> ScalingLadder {
        ScalingLadder {
            deltas: vec![0.25, 0.125, 0.0625],
            cells_per_delta: 4,
        }
    }

    #[test]
    fn scaling_ladder_recovers_the_predicted_exponent() {
        let gm = GraphMeasure::quadratic(vec![1.0]).unwrap();
        let data = run_ladder(&gm, &quick_ladder(), &quick_ctx(), false).unwrap();
        for point in [pt(0.75, 0.25), pt(0.5, 0.5), pt(1.0, 0.0)] {
            let (fitted, r2, inf_min, inf_max) = evaluate_ladder_at(point, &data).unwrap();
            let predicted = predicted_exponent(1, point);
            assert!(
                (fitted - predicted).abs() < 0.1,
                "({}, {}): fitted {fitted} vs predicted {predicted}",
                point.ip,
                point.iq
            );
            assert!(r2 > 0.98, "poor fit r2={r2}");
            assert!(inf_min > 0.0 && inf_max / inf_min < 2.0, "inf spread");
        }
    }

    #[test]
    fn scaling_experiment_populates_the_record() {
        let gm = GraphMeasure::quadratic(vec![1.0]).unwrap();
        let r = scaling_experiment(pt(0.75, 0.25), &gm, &quick_ladder(), &quick_ctx()).unwrap();
        assert!(r.inside_thm1);
        assert!(r.inside_thm2.is_none());
        assert!((r.fitted - r.predicted).abs() < 0.1);
        assert!(r.inf_min > 0.0 && r.inf_min <= r.inf_max);
    }

    #[test]
    fn dual_ladder_probes_the_dual_line() {
        let gm = GraphMeasure::quadratic(vec![1.0]).unwrap();
        // a point on the dual boundary line 1/q = 1/((2n+1)p)
        let point = pt(0.6, 0.2);
        let r = dual_scaling_experiment(point, &gm, &quick_ladder(), &quick_ctx()).unwrap();
        assert!((r.predicted - 0.0).abs() < 1e-12);
        assert!((r.fitted - r.predicted).abs() < 0.1, "fitted {}", r.fitted);
        // strictly outside the dual line: negative dual exponent
        let outside = pt(1.0, 0.0);
        let r2 = dual_scaling_experiment(outside, &gm, &quick_ladder(), &quick_ctx()).unwrap();
        assert!(r2.predicted < 0.0);
        assert!(r2.fitted < -0.5, "fitted {}", r2.fitted);
    }

    #[test]
    fn norm_estimator_matches_plain_power_iteration_at_p2q2() {
        let gm = GraphMeasure::quadratic(vec![1.0]).unwrap();
        let grid = Grid::boxed(1, 4.0, 11, 8.0, 15).unwrap();
        let q = QuadratureSpec {
            nodes_per_axis: 10,
            interp: InterpOrder::Linear,
            mode: crate::convolve::WQuadMode::Tensor,
        };
        let op = TNuOperator::new(gm.clone(), q).unwrap();
        let iters = 12;
        let nonlinear = pq_norm_lower_bound(pt(0.5, 0.5), &gm, &grid, &q, iters).unwrap();
        // plain ⟨T*Tf, f⟩ power iteration as the independent p=2 oracle
        let mut f = SampledField::from_fn(grid.clone(), |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            (-0.5 * r2).exp()
        });
        let n0 = f.lp_norm(2.0).unwrap();
        f.values.iter_mut().for_each(|v| *v /= n0);
        let mut best: f64 = 0.0;
        for _ in 0..iters {
            let u = op.forward(&f).unwrap().field;
            best = best.max(u.lp_norm(2.0).unwrap());
            let w = op.adjoint(&u).unwrap().field;
            let nw = w.lp_norm(2.0).unwrap();
            let mut next = w;
            next.values.iter_mut().for_each(|v| *v /= nw);
            f = next;
        }
        assert!(
            (nonlinear - best).abs() <= 1e-6 * best,
            "nonlinear {nonlinear} vs oracle {best}"
        );
    }

    #[test]
    fn norm_estimator_is_homogeneous_and_monotone() {
        let gm = GraphMeasure::quadratic(vec![1.0]).unwrap();
        let grid = Grid::boxed(1, 4.0, 11, 8.0, 15).unwrap();
        let q = QuadratureSpec {
            nodes_per_axis: 10,
            interp: InterpOrder::Linear,
            mode: crate::convolve::WQuadMode::Tensor,
        };
        let op = TNuOperator::new(gm.clone(), q).unwrap();
        let scale = 3.7;
        let plain = power_lower_bound(
            |f| op.forward(f).map(|o| o.field),
            |g| op.adjoint(g).map(|o| o.field),
            &grid,
            4.0 / 3.0,
            4.0,
            6,
        )
        .unwrap();
        let scaled = power_lower_bound(
            |f| {
                op.forward(f).map(|o| {
                    let mut field = o.field;
                    field.values.iter_mut().for_each(|v| *v *= scale);
                    field
                })
            },
            |g| {
                op.adjoint(g).map(|o| {
                    let mut field = o.field;
                    field.values.iter_mut().for_each(|v| *v *= scale);
                    field
                })
            },
            &grid,
            4.0 / 3.0,
            4.0,
            6,
        )
        .unwrap();
        assert!(
            (scaled - scale * plain).abs() < 1e-10 * scaled,
            "homogeneity: {scaled} vs {} ",
            scale * plain
        );
        // more iterations never lower the reported bound
        let more = power_lower_bound(
            |f| op.forward(f).map(|o| o.field),
            |g| op.adjoint(g).map(|o| o.field),
            &grid,
            4.0 / 3.0,
            4.0,
            12,
        )
        .unwrap();
        assert!(more >= plain - 1e-12);
    }

    #[test]
    fn norm_estimator_rejects_endpoints() {
        let gm = GraphMeasure::quadratic(vec![1.0]).unwrap();
        let grid = Grid::boxed(1, 4.0, 9, 8.0, 11).unwrap();
        let q = QuadratureSpec::default();
        assert!(pq_norm_lower_bound(pt(1.0, 0.5), &gm, &grid, &q, 3).is_err());
        assert!(pq_norm_lower_bound(pt(0.5, 0.0), &gm, &grid, &q, 3).is_err());
    }

    #[test]
    fn scan_exponent_signs_separate_inside_from_outside() {
        let gm = GraphMeasure::quadratic(vec![1.0]).unwrap();
        let ctx = ScalingContext {
            x_samples_per_axis: 13,
            t_samples: 4,
            quad: QuadratureSpec {
                nodes_per_axis: 10,
                interp: InterpOrder::Linear,
                mode: crate::convolve::WQuadMode::Tensor,
            },
        };
        let ladder = quick_ladder();
        let primal = run_ladder(&gm, &ladder, &ctx, false).unwrap();
        let dual = run_ladder(&gm, &ladder, &ctx, true).unwrap();
        // interior scan points with 1 < p, q < ∞: gap to prediction ≤ 0.1
        for ip in [0.25, 0.5, 0.75] {
            for iq in [0.25, 0.5, 0.75] {
                let point = pt(ip, iq);
                let (fitted, _, _, _) = evaluate_ladder_at(point, &primal).unwrap();
                let predicted = predicted_exponent(1, point);
                assert!(
                    (fitted - predicted).abs() <= 0.1,
                    "({ip},{iq}): {fitted} vs {predicted}"
                );
            }
        }
        // inside the triangle the fitted exponent stays ≥ −0.05
        for point in [pt(0.5, 0.25), pt(0.75, 0.25), pt(0.5, 0.5)] {
            let (fitted, _, _, _) = evaluate_ladder_at(point, &primal).unwrap();
            assert!(fitted >= -0.05, "inside point came out {fitted}");
        }
        // strictly outside both necessary lines the evidence is ≤ −0.1
        for point in [pt(0.9, 0.1), pt(1.0, 0.0)] {
            let (fp, _, _, _) = evaluate_ladder_at(point, &primal).unwrap();
            let (fd, _, _, _) = evaluate_ladder_at(point.reflected(), &dual).unwrap();
            assert!(fp.min(fd) <= -0.1, "outside point: primal {fp}, dual {fd}");
        }
    }

    /// Norm-bound growth under grid refinement separates inside from
    /// outside heuristically; reported, not asserted.
    #[test]
    #[ignore = "diagnostic: run with --ignored to print the refinement comparison"]
    fn norm_bound_refinement_diagnostic() {
        let gm = GraphMeasure::quadratic(vec![1.0]).unwrap();
        let q = QuadratureSpec {
            nodes_per_axis: 10,
            interp: InterpOrder::Linear,
            mode: crate::convolve::WQuadMode::Tensor,
        };
        let coarse = Grid::boxed(1, 4.0, 11, 8.0, 15).unwrap();
        let fine = Grid::boxed(1, 4.0, 17, 8.0, 23).unwrap();
        for (label, point) in [("vertex C", pt(0.75, 0.25)), ("outside", pt(0.25, 0.75))] {
            let a = pq_norm_lower_bound(point, &gm, &coarse, &q, 8).unwrap();
            let b = pq_norm_lower_bound(point, &gm, &fine, &q, 8).unwrap();
            println!(
                "{label}: coarse {a:.4e}, refined {b:.4e}, growth {:.2}%",
                100.0 * (b / a - 1.0)
            );
        }
    }

    #[test]
    fn scan_flags_membership_and_runs_both_probes() {
        let gm = GraphMeasure::quadratic(vec![1.0]).unwrap();
        let points: Vec<TypePoint> = vec![pt(0.0, 0.0), pt(0.5, 0.25), pt(0.25, 0.75)];
        let (primal, dual) = scan(&points, &gm, &quick_ladder(), &quick_ctx(), None, 0).unwrap();
        assert_eq!(primal.len(), 3);
        assert_eq!(dual.len(), 3);
        let row0 = primal[0].as_ref().unwrap();
        assert!(row0.inside_thm1);
        // above the diagonal: p ≤ q fails, so the point is outside
        let row2 = primal[2].as_ref().unwrap();
        assert!(!row2.inside_thm1);
        assert!(dual[1].as_ref().unwrap().norm_lower_bound.is_none());
    }
}
