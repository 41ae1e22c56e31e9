//! The discretized right-convolution operator T_ν on grid-sampled fields
//! over a box in ℝ^{2n} × ℝ.
//!
//! T_ν f(x,t) = ∫ f(x−w, t−φ(w)−½W(x,w)) η(w) dw, so each output point
//! pulls f back through a twisted shift. The twist breaks any FFT
//! structure; the w-integral is a fixed-domain quadrature over supp η and
//! off-grid reads interpolate (multilinear or cubic, with zero extension
//! outside the box). The adjoint pushes forward instead:
//! T*_ν g(x,t) = ∫ g(x+y, t+φ(y)+½W(x,y)) η(y) dy.

use crate::error::{Error, Result};
use crate::hgroup::{symplectic_form, HPoint};
use crate::measures::{GraphMeasure, PhaseSpec};
use crate::quad::gauss_legendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read as _, Write as _};
use std::path::Path;

/// Soft cap on grid storage (points × 8 bytes ≈ 1 GiB).
const MAX_GRID_POINTS: usize = 1 << 27;

/// Rectangular grid on [−h₁,h₁] × … × [−h_{2n+1}, h_{2n+1}], row-major with
/// the last (central) axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub half_extents: Vec<f64>,
    pub points: Vec<usize>,
    pub spacing: Vec<f64>,
}

impl Grid {
    pub fn new(n: usize, half_extents: Vec<f64>, points: Vec<usize>) -> Result<Self> {
        let d = 2 * n + 1;
        if half_extents.len() != d || points.len() != d {
            return Err(Error::Dimension {
                expected: d,
                found: half_extents.len().max(points.len()),
            });
        }
        if points.iter().any(|&p| p < 2) {
            return Err(Error::Resolution("need at least 2 points per axis".into()));
        }
        if half_extents.iter().any(|&h| h.is_nan() || h <= 0.0) {
            return Err(Error::Resolution("half extents must be positive".into()));
        }
        let total: usize = points.iter().product();
        if total > MAX_GRID_POINTS {
            return Err(Error::Resolution(format!(
                "grid of {total} points exceeds the memory budget"
            )));
        }
        let spacing = half_extents
            .iter()
            .zip(&points)
            .map(|(&h, &p)| 2.0 * h / (p - 1) as f64)
            .collect();
        Ok(Self {
            n,
            half_extents,
            points,
            spacing,
        })
    }

    /// Box grid: `spatial` points on each of the 2n spatial axes over
    /// [−hx, hx], `central` points on [−ht, ht].
    pub fn boxed(n: usize, hx: f64, spatial: usize, ht: f64, central: usize) -> Result<Self> {
        let d = 2 * n + 1;
        let mut he = vec![hx; d];
        he[d - 1] = ht;
        let mut pts = vec![spatial; d];
        pts[d - 1] = central;
        Self::new(n, he, pts)
    }

    pub fn dims(&self) -> usize {
        2 * self.n + 1
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Coordinate of index `k` along `axis`.
    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        -self.half_extents[axis] + self.spacing[axis] * k as f64
    }

    /// Decode a flat index into per-axis indices (last axis fastest).
    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        for axis in (0..self.dims()).rev() {
            out[axis] = flat % self.points[axis];
            flat /= self.points[axis];
        }
    }

    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut idx = [0usize; 8];
        self.unflatten(flat, &mut idx[..self.dims()]);
        for axis in 0..self.dims() {
            out[axis] = self.coord(axis, idx[axis]);
        }
    }
}

/// Interpolation order for off-grid reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterpOrder {
    Linear,
    Cubic,
}

/// A real scalar field sampled on a [`Grid`], values in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl SampledField {
    pub fn zeros(grid: Grid) -> Self {
        let len = grid.len();
        Self {
            grid,
            values: vec![0.0; len],
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64 + Sync>(grid: Grid, f: F) -> Self {
        let d = grid.dims();
        let values: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|flat| {
                let mut x = [0.0f64; 8];
                grid.point(flat, &mut x[..d]);
                f(&x[..d])
            })
            .collect();
        Self { grid, values }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.grid.len() {
            return Err(Error::Dimension {
                expected: self.grid.len(),
                found: self.values.len(),
            });
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("field contains non-finite samples".into()));
        }
        Ok(())
    }

    /// Interpolated read with zero extension outside the box.
    pub fn interp(&self, x: &[f64], order: InterpOrder) -> f64 {
        debug_assert_eq!(x.len(), self.grid.dims());
        match order {
            InterpOrder::Linear => self.interp_kernel::<2>(x),
            InterpOrder::Cubic => self.interp_kernel::<4>(x),
        }
    }

    fn interp_kernel<const K: usize>(&self, x: &[f64]) -> f64 {
        let d = self.grid.dims();
        let mut base = [0isize; 8];
        let mut wts = [[0.0f64; K]; 8];
        for axis in 0..d {
            if x[axis].abs() > self.grid.half_extents[axis] + (K as f64) * self.grid.spacing[axis] {
                return 0.0;
            }
            let u = (x[axis] + self.grid.half_extents[axis]) / self.grid.spacing[axis];
            let i0 = u.floor();
            let frac = u - i0;
            if K == 2 {
                base[axis] = i0 as isize;
                wts[axis][0] = 1.0 - frac;
                wts[axis][1] = frac;
            } else {
                base[axis] = i0 as isize - 1;
                let t = frac;
                let t2 = t * t;
                let t3 = t2 * t;
                // Catmull-Rom
                wts[axis][0] = 0.5 * (-t3 + 2.0 * t2 - t);
                wts[axis][1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
                wts[axis][2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
                wts[axis][3] = 0.5 * (t3 - t2);
            }
        }
        let mut acc = 0.0;
        let mut offsets = [0usize; 8];
        'outer: loop {
            let mut w = 1.0;
            let mut flat = 0usize;
            let mut inside = true;
            for axis in 0..d {
                let idx = base[axis] + offsets[axis] as isize;
                if idx < 0 || idx >= self.grid.points[axis] as isize {
                    inside = false;
                    break;
                }
                w *= wts[axis][offsets[axis]];
                flat = flat * self.grid.points[axis] + idx as usize;
            }
            if inside && w != 0.0 {
                acc += w * self.values[flat];
            }
            // odometer over the K^d stencil
            for axis in (0..d).rev() {
                offsets[axis] += 1;
                if offsets[axis] < K {
                    continue 'outer;
                }
                offsets[axis] = 0;
                if axis == 0 {
                    break 'outer;
                }
            }
        }
        acc
    }

    /// Lᵖ norm by the Riemann sum (Σ|f|ᵖ · cellvol)^{1/p}; p = ∞ is max|f|.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_infinite() && p > 0.0 {
            return Ok(self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
        if p.is_nan() || p < 1.0 {
            return Err(Error::Range(format!("Lᵖ norm needs p ≥ 1, got {p}")));
        }
        let cell = self.grid.cell_volume();
        let sum: f64 = self.values.par_iter().map(|v| v.abs().powf(p)).sum();
        Ok((sum * cell).powf(1.0 / p))
    }

    pub fn inner(&self, other: &SampledField) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        let cell = self.grid.cell_volume();
        self.values
            .par_iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * cell
    }

    /// Dump as little-endian f64 rows plus a JSON header next to it.
    pub fn write_files(&self, base: &Path) -> std::io::Result<()> {
        let header = serde_json::json!({
            "n": self.grid.n,
            "dims": self.grid.points,
            "half_extents": self.grid.half_extents,
            "spacing": self.grid.spacing,
            "dtype": "f64",
            "byte_order": "little-endian",
            "order": "row-major",
        });
        std::fs::write(
            base.with_extension("json"),
            serde_json::to_string_pretty(&header)?,
        )?;
        let mut out = std::io::BufWriter::new(std::fs::File::create(base.with_extension("bin"))?);
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()
    }

    pub fn read_files(base: &Path) -> Result<Self> {
        let header: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(base.with_extension("json"))
                .map_err(|e| Error::Config(format!("cannot read field header: {e}")))?,
        )
        .map_err(|e| Error::Config(format!("bad field header: {e}")))?;
        let n = header["n"]
            .as_u64()
            .ok_or_else(|| Error::Config("header missing n".into()))? as usize;
        let points: Vec<usize> = serde_json::from_value(header["dims"].clone())
            .map_err(|e| Error::Config(format!("bad dims: {e}")))?;
        let half_extents: Vec<f64> = serde_json::from_value(header["half_extents"].clone())
            .map_err(|e| Error::Config(format!("bad half_extents: {e}")))?;
        let grid = Grid::new(n, half_extents, points)?;
        let mut file = std::fs::File::open(base.with_extension("bin"))
            .map_err(|e| Error::Config(format!("cannot read field data: {e}")))?;
        let mut raw = Vec::new();
        file.read_to_end(&mut raw)
            .map_err(|e| Error::Config(format!("cannot read field data: {e}")))?;
        if raw.len() != 8 * grid.len() {
            return Err(Error::Dimension {
                expected: 8 * grid.len(),
                found: raw.len(),
            });
        }
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let f = Self { grid, values };
        f.validate()?;
        Ok(f)
    }
}

/// Node layout of the w-quadrature over supp η.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WQuadMode {
    /// tensor Gauss-Legendre over the bounding box of supp η
    Tensor,
    /// polar nodes per complex pair (quadratic phase) or a single radial
    /// shell (power phase)
    RadialAngular,
}

/// Quadrature + interpolation policy for the discretized operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub nodes_per_axis: usize,
    pub interp: InterpOrder,
    pub mode: WQuadMode,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes_per_axis: 16,
            interp: InterpOrder::Cubic,
            mode: WQuadMode::RadialAngular,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_axis < 8 {
            return Err(Error::Config(
                "quadrature needs at least 8 nodes per axis".into(),
            ));
        }
        Ok(())
    }
}

/// Precomputed w-nodes with weights already containing η(w) dw.
pub struct WNodes {
    /// flattened nodes, 2n coordinates each
    pub coords: Vec<f64>,
    pub weights: Vec<f64>,
    pub phases: Vec<f64>,
    pub dim: usize,
}

impl WNodes {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn build(gm: &GraphMeasure, q: &QuadratureSpec) -> Result<WNodes> {
        q.validate()?;
        let d = 2 * gm.n;
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        match q.mode {
            WQuadMode::Tensor => {
                let b = gm.support_halfwidth();
                let (nodes, wts) = gauss_legendre(q.nodes_per_axis);
                let mut idx = vec![0usize; d];
                'outer: loop {
                    let mut w = 1.0;
                    let mut pt = vec![0.0; d];
                    for axis in 0..d {
                        pt[axis] = b * nodes[idx[axis]];
                        w *= b * wts[idx[axis]];
                    }
                    let density = gm.density(&pt);
                    if density > 0.0 {
                        coords.extend_from_slice(&pt);
                        weights.push(w * density);
                    }
                    for axis in (0..d).rev() {
                        idx[axis] += 1;
                        if idx[axis] < q.nodes_per_axis {
                            continue 'outer;
                        }
                        idx[axis] = 0;
                        if axis == 0 {
                            break 'outer;
                        }
                    }
                }
            }
            WQuadMode::RadialAngular => {
                build_radial_angular(gm, q, &mut coords, &mut weights)?;
            }
        }
        let phases = coords
            .chunks(d)
            .map(|w| gm.phase_at(w).expect("nodes have the right dimension"))
            .collect();
        Ok(WNodes {
            coords,
            weights,
            phases,
            dim: d,
        })
    }
}

/// Radial Gauss-Legendre nodes split at the plateau edge, where the cutoff
/// stops being analytic.
fn radial_panel_nodes(cutoff: &crate::measures::CutoffSpec, nr: usize) -> Vec<(f64, f64)> {
    let a = cutoff.plateau_radius.sqrt();
    let b = cutoff.support_radius.sqrt();
    let (gl_n, gl_w) = gauss_legendre(nr);
    let mut out = Vec::with_capacity(2 * nr);
    for (lo, hi) in [(0.0, a), (a, b)] {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for (x, w) in gl_n.iter().zip(gl_w) {
            out.push((mid + half * x, half * w));
        }
    }
    out
}

fn build_radial_angular(
    gm: &GraphMeasure,
    q: &QuadratureSpec,
    coords: &mut Vec<f64>,
    weights: &mut Vec<f64>,
) -> Result<()> {
    let n = gm.n;
    let nr = q.nodes_per_axis / 2;
    let na = 2 * q.nodes_per_axis;
    match &gm.phase {
        PhaseSpec::Quadratic { .. } => {
            // polar nodes per complex pair (w_j, w_{n+j}) = r_j e^{iθ_j}
            let radial: Vec<Vec<(f64, f64)>> = gm
                .cutoffs
                .iter()
                .map(|c| radial_panel_nodes(c, nr))
                .collect();
            let nr_total = radial[0].len();
            let mut idx = vec![0usize; 2 * n];
            let dtheta = 2.0 * std::f64::consts::PI / na as f64;
            'outer: loop {
                let mut pt = vec![0.0; 2 * n];
                let mut w = 1.0;
                for j in 0..n {
                    let (r, rw) = radial[j][idx[2 * j]];
                    let theta = dtheta * idx[2 * j + 1] as f64;
                    pt[j] = r * theta.cos();
                    pt[n + j] = r * theta.sin();
                    w *= rw * r * dtheta;
                }
                let density = gm.density(&pt);
                if density > 0.0 {
                    coords.extend_from_slice(&pt);
                    weights.push(w * density);
                }
                for k in (0..2 * n).rev() {
                    idx[k] += 1;
                    let cap = if k % 2 == 0 { nr_total } else { na };
                    if idx[k] < cap {
                        continue 'outer;
                    }
                    idx[k] = 0;
                    if k == 0 {
                        break 'outer;
                    }
                }
            }
            Ok(())
        }
        PhaseSpec::Power { .. } => match n {
            1 => {
                let dtheta = 2.0 * std::f64::consts::PI / na as f64;
                for (r, w) in radial_panel_nodes(&gm.cutoffs[0], nr) {
                    for k in 0..na {
                        let theta = dtheta * k as f64;
                        let pt = [r * theta.cos(), r * theta.sin()];
                        let density = gm.density(&pt);
                        if density > 0.0 {
                            coords.extend_from_slice(&pt);
                            weights.push(w * r * dtheta * density);
                        }
                    }
                }
                Ok(())
            }
            2 => {
                // S³ product rule: dS = sin²χ dχ sinθ dθ dφ
                let nang = (q.nodes_per_axis / 2).max(6);
                let (an, aw) = gauss_legendre(nang);
                let dphi = 2.0 * std::f64::consts::PI / na as f64;
                for (r, wr) in radial_panel_nodes(&gm.cutoffs[0], nr) {
                    for (xc, wc) in an.iter().zip(aw) {
                        let chi = 0.5 * std::f64::consts::PI * (xc + 1.0);
                        let wchi = 0.5 * std::f64::consts::PI * wc * chi.sin().powi(2);
                        for (xt, wt) in an.iter().zip(aw) {
                            let th = 0.5 * std::f64::consts::PI * (xt + 1.0);
                            let wth = 0.5 * std::f64::consts::PI * wt * th.sin();
                            for k in 0..na {
                                let phi = dphi * k as f64;
                                let pt = [
                                    r * chi.cos(),
                                    r * chi.sin() * th.cos(),
                                    r * chi.sin() * th.sin() * phi.cos(),
                                    r * chi.sin() * th.sin() * phi.sin(),
                                ];
                                let density = gm.density(&pt);
                                if density > 0.0 {
                                    coords.extend_from_slice(&pt);
                                    weights.push(wr * r.powi(3) * wchi * wth * dphi * density);
                                }
                            }
                        }
                    }
                }
                Ok(())
            }
            _ => Err(Error::Resolution(
                "radial-angular nodes are wired for n ≤ 2".into(),
            )),
        },
    }
}

/// Output of an operator application: field plus the fraction of quadrature
/// reads that landed outside the input box (zero extension).
pub struct ConvOutput {
    pub field: SampledField,
    pub coverage_outside: f64,
}

fn apply_kernel(
    f: &SampledField,
    gm: &GraphMeasure,
    nodes: &WNodes,
    q: &QuadratureSpec,
    adjoint: bool,
) -> Result<ConvOutput> {
    f.validate()?;
    if f.grid.n != gm.n {
        return Err(Error::Dimension {
            expected: gm.n,
            found: f.grid.n,
        });
    }
    let grid = f.grid.clone();
    let d = grid.dims();
    let dw = nodes.dim;
    let counts: Vec<(f64, usize)> = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let mut x = [0.0f64; 8];
            grid.point(flat, &mut x[..d]);
            let mut arg = [0.0f64; 8];
            let mut acc = 0.0;
            let mut outside = 0usize;
            for (i, w) in nodes.coords.chunks_exact(dw).enumerate() {
                let tw = symplectic_form(&x[..dw], w).expect("node dims match");
                if adjoint {
                    for (k, a) in arg[..dw].iter_mut().enumerate() {
                        *a = x[k] + w[k];
                    }
                    arg[d - 1] = x[d - 1] + nodes.phases[i] + 0.5 * tw;
                } else {
                    for (k, a) in arg[..dw].iter_mut().enumerate() {
                        *a = x[k] - w[k];
                    }
                    arg[d - 1] = x[d - 1] - nodes.phases[i] - 0.5 * tw;
                }
                let in_box = arg[..d]
                    .iter()
                    .zip(&grid.half_extents)
                    .all(|(v, h)| v.abs() <= *h);
                if !in_box {
                    outside += 1;
                }
                acc += nodes.weights[i] * f.interp(&arg[..d], q.interp);
            }
            (acc, outside)
        })
        .collect();
    let total_reads = grid.len() * nodes.len();
    let outside: usize = counts.iter().map(|c| c.1).sum();
    let values = counts.into_iter().map(|c| c.0).collect();
    Ok(ConvOutput {
        field: SampledField { grid, values },
        coverage_outside: outside as f64 / total_reads.max(1) as f64,
    })
}

/// T_ν f on the grid of f.
pub fn apply_t_nu(f: &SampledField, gm: &GraphMeasure, q: &QuadratureSpec) -> Result<ConvOutput> {
    let nodes = WNodes::build(gm, q)?;
    apply_kernel(f, gm, &nodes, q, false)
}

/// T*_ν g on the grid of g.
pub fn apply_adjoint(
    g: &SampledField,
    gm: &GraphMeasure,
    q: &QuadratureSpec,
) -> Result<ConvOutput> {
    let nodes = WNodes::build(gm, q)?;
    apply_kernel(g, gm, &nodes, q, true)
}

/// Reusable operator context: nodes built once, applied many times.
pub struct TNuOperator {
    pub gm: GraphMeasure,
    pub q: QuadratureSpec,
    nodes: WNodes,
}

impl TNuOperator {
    pub fn new(gm: GraphMeasure, q: QuadratureSpec) -> Result<Self> {
        let nodes = WNodes::build(&gm, &q)?;
        Ok(Self { gm, q, nodes })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn forward(&self, f: &SampledField) -> Result<ConvOutput> {
        apply_kernel(f, &self.gm, &self.nodes, &self.q, false)
    }

    pub fn adjoint(&self, g: &SampledField) -> Result<ConvOutput> {
        apply_kernel(g, &self.gm, &self.nodes, &self.q, true)
    }

    /// Pointwise T_ν f at arbitrary (x, t) sample points, with the
    /// w-quadrature restricted to the window from which f's box is
    /// reachable.
    pub fn forward_at(&self, f: &SampledField, points: &[(Vec<f64>, f64)]) -> Result<Vec<f64>> {
        self.eval_at(f, points, false)
    }

    pub fn adjoint_at(&self, g: &SampledField, points: &[(Vec<f64>, f64)]) -> Result<Vec<f64>> {
        self.eval_at(g, points, true)
    }

    fn eval_at(
        &self,
        f: &SampledField,
        points: &[(Vec<f64>, f64)],
        adjoint: bool,
    ) -> Result<Vec<f64>> {
        f.validate()?;
        let dw = 2 * self.gm.n;
        let d = dw + 1;
        if f.grid.dims() != d {
            return Err(Error::Dimension {
                expected: d,
                found: f.grid.dims(),
            });
        }
        let b = self.gm.support_halfwidth();
        let npa = self.q.nodes_per_axis.max(12);
        let (gln, glw) = gauss_legendre(npa);
        let halo: Vec<f64> = (0..dw)
            .map(|k| 4.0 * f.grid.spacing[k] + f.grid.half_extents[k])
            .collect();
        points
            .par_iter()
            .map(|(x, t)| {
                if x.len() != dw {
                    return Err(Error::Dimension {
                        expected: dw,
                        found: x.len(),
                    });
                }
                // per-axis window of w with f(x ∓ w, ·) possibly nonzero
                let mut lo = [0.0f64; 8];
                let mut hi = [0.0f64; 8];
                for k in 0..dw {
                    let (a0, a1) = if adjoint {
                        (-halo[k] - x[k], halo[k] - x[k])
                    } else {
                        (x[k] - halo[k], x[k] + halo[k])
                    };
                    lo[k] = a0.max(-b);
                    hi[k] = a1.min(b);
                    if lo[k] >= hi[k] {
                        return Ok(0.0);
                    }
                }
                let mut idx = [0usize; 8];
                let mut acc = 0.0;
                let mut w = [0.0f64; 8];
                let mut arg = [0.0f64; 8];
                'outer: loop {
                    let mut wt = 1.0;
                    for k in 0..dw {
                        let mid = 0.5 * (lo[k] + hi[k]);
                        let half = 0.5 * (hi[k] - lo[k]);
                        w[k] = mid + half * gln[idx[k]];
                        wt *= half * glw[idx[k]];
                    }
                    let density = self.gm.density(&w[..dw]);
                    if density > 0.0 {
                        let phase = self.gm.phase_at(&w[..dw])?;
                        let tw = symplectic_form(x, &w[..dw])?;
                        if adjoint {
                            for k in 0..dw {
                                arg[k] = x[k] + w[k];
                            }
                            arg[d - 1] = t + phase + 0.5 * tw;
                        } else {
                            for k in 0..dw {
                                arg[k] = x[k] - w[k];
                            }
                            arg[d - 1] = t - phase - 0.5 * tw;
                        }
                        acc += wt * density * f.interp(&arg[..d], self.q.interp);
                    }
                    for k in (0..dw).rev() {
                        idx[k] += 1;
                        if idx[k] < npa {
                            continue 'outer;
                        }
                        idx[k] = 0;
                        if k == 0 {
                            break 'outer;
                        }
                    }
                }
                Ok(acc)
            })
            .collect()
    }
}

/// Left translation (τ_g f)(x,t) = f(g⁻¹·(x,t)) = f(x−y, t−s−½W(y,x)).
pub fn translate(f: &SampledField, g: &HPoint, order: InterpOrder) -> Result<SampledField> {
    f.validate()?;
    let d = f.grid.dims();
    if g.x.len() + 1 != d {
        return Err(Error::Dimension {
            expected: d - 1,
            found: g.x.len(),
        });
    }
    // pure central translations aligned with the grid are exact index shifts
    let spatial_zero = g.x.iter().all(|&v| v == 0.0);
    if spatial_zero {
        let dt = f.grid.spacing[d - 1];
        let steps = g.t / dt;
        if (steps - steps.round()).abs() < 1e-9 {
            let k = steps.round() as isize;
            let grid = f.grid.clone();
            let nt = grid.points[d - 1] as isize;
            let mut values = vec![0.0; f.values.len()];
            for (flat, v) in values.iter_mut().enumerate() {
                let t_idx = (flat as isize) % nt;
                let src_t = t_idx - k; // f(t − s)
                if src_t >= 0 && src_t < nt {
                    *v = f.values[(flat as isize + (src_t - t_idx)) as usize];
                }
            }
            return Ok(SampledField { grid, values });
        }
    }
    let grid = f.grid.clone();
    let dw = d - 1;
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let mut x = [0.0f64; 8];
            grid.point(flat, &mut x[..d]);
            let w = symplectic_form(&g.x, &x[..dw]).expect("dims checked");
            let mut arg = [0.0f64; 8];
            for k in 0..dw {
                arg[k] = x[k] - g.x[k];
            }
            arg[d - 1] = x[d - 1] - g.t - 0.5 * w;
            f.interp(&arg[..d], order)
        })
        .collect();
    Ok(SampledField { grid, values })
}
