//! Sampled functions on (0, ∞): grids, CSV exchange, quadrature and finite
//! differences.
//!
//! Quadrature is piecewise cubic: on each cell the integrand is replaced by
//! the cubic through a four-point stencil, which is then integrated exactly,
//! optionally against an exponential weight `e^{-a τ}` (product integration).
//! The exponential variant is what keeps the Green-kernel integrals accurate
//! when `|ω| h` is not small.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid layout tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Linear,
    /// Log-spaced near the origin, uniform further out (or anything else).
    Mixed,
}

#[derive(Debug, Clone)]
struct Cell {
    /// First index of the four-point stencil.
    start: usize,
    h: f64,
    /// `coef[k][m]`: coefficient of `τ^m` in the Lagrange basis polynomial of
    /// stencil node `k`, with `τ` measured from the left end of the cell.
    coef: [[f64; 4]; 4],
    /// Plain integration weights over the cell.
    weights: [f64; 4],
}

/// Strictly increasing positive sample points with cached quadrature data.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    points: Vec<f64>,
    spacing: Spacing,
    cells: Vec<Cell>,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

fn poly_mul_linear(p: &[f64; 4], root: f64) -> [f64; 4] {
    // p(τ) (τ - root), truncated to degree 3 (callers never overflow it)
    let mut out = [0.0; 4];
    for m in 0..4 {
        if m + 1 < 4 {
            out[m + 1] += p[m];
        }
        out[m] -= root * p[m];
    }
    out
}

fn build_cell(points: &[f64], i: usize) -> Cell {
    let n = points.len();
    let start = if i == 0 {
        0
    } else if i + 2 >= n {
        n - 4
    } else {
        i - 1
    };
    let x0 = points[i];
    let h = points[i + 1] - x0;
    let nodes: [f64; 4] = std::array::from_fn(|k| points[start + k] - x0);
    let mut coef = [[0.0; 4]; 4];
    for k in 0..4 {
        let mut p = [1.0, 0.0, 0.0, 0.0];
        let mut denom = 1.0;
        for j in 0..4 {
            if j != k {
                p = poly_mul_linear(&p, nodes[j]);
                denom *= nodes[k] - nodes[j];
            }
        }
        for m in 0..4 {
            coef[k][m] = p[m] / denom;
        }
    }
    let weights = std::array::from_fn(|k| {
        (0..4)
            .map(|m| coef[k][m] * h.powi(m as i32 + 1) / (m as f64 + 1.0))
            .sum()
    });
    Cell {
        start,
        h,
        coef,
        weights,
    }
}

fn detect_spacing(points: &[f64]) -> Spacing {
    let n = points.len();
    let ratio0 = points[1] / points[0];
    let diff0 = points[1] - points[0];
    let log_like = points.windows(2).all(|w| ((w[1] / w[0]) / ratio0 - 1.0).abs() < 1e-9);
    if log_like {
        return Spacing::Log;
    }
    let lin_like = points
        .windows(2)
        .all(|w| ((w[1] - w[0]) / diff0 - 1.0).abs() < 1e-9 * n as f64);
    if lin_like {
        Spacing::Linear
    } else {
        Spacing::Mixed
    }
}

impl RadialGrid {
    /// Validates and wraps arbitrary sample points (at least 4 are needed
    /// for the cubic quadrature).
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::Invalid(format!(
                "a radial grid needs at least 4 points, got {}",
                points.len()
            )));
        }
        if !(points[0] > 0.0) {
            return Err(Error::Invalid(format!("grid must start at r > 0, got {}", points[0])));
        }
        for w in points.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::Invalid("grid must be strictly increasing and finite".into()));
            }
        }
        let spacing = detect_spacing(&points);
        let cells = (0..points.len() - 1).map(|i| build_cell(&points, i)).collect();
        Ok(RadialGrid { points, spacing, cells })
    }

    pub fn log(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        check_range(r_min, r_max)?;
        let step = (r_max / r_min).ln() / (n.max(2) - 1) as f64;
        let mut pts: Vec<f64> = (0..n).map(|k| r_min * (k as f64 * step).exp()).collect();
        if let Some(last) = pts.last_mut() {
            *last = r_max;
        }
        Self::from_points(pts)
    }

    pub fn linear(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        check_range(r_min, r_max)?;
        let step = (r_max - r_min) / (n.max(2) - 1) as f64;
        Self::from_points((0..n).map(|k| r_min + k as f64 * step).collect())
    }

    /// Geometric spacing with `per_decade` points per decade from `r_min`
    /// until the step reaches `max_step`, then uniform steps of `max_step`
    /// up to (at least) `r_max`.
    pub fn hybrid(r_min: f64, r_max: f64, per_decade: usize, max_step: f64) -> Result<Self> {
        check_range(r_min, r_max)?;
        if per_decade == 0 || !(max_step > 0.0) {
            return Err(Error::Invalid(
                "hybrid grid needs per_decade > 0 and max_step > 0".into(),
            ));
        }
        let q = 10f64.powf(1.0 / per_decade as f64);
        let mut pts = vec![r_min];
        let mut r = r_min;
        while r < r_max {
            let step = (r * (q - 1.0)).min(max_step);
            r += step;
            pts.push(r);
        }
        Self::from_points(pts)
    }

    /// Default grid for a spectral parameter of modulus `scale = |ω|`: the
    /// hybrid layout in the variable `|ω| r`, covering `[1e-6, r_max_scaled]`
    /// in that variable.
    pub fn for_scale(scale: f64, r_max_scaled: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::Invalid(format!("grid scale must be positive, got {scale}")));
        }
        let base = Self::hybrid(1e-6, r_max_scaled, 40, 0.04)?;
        Ok(base.scaled(1.0 / scale))
    }

    /// The grid `{s r_k}`.
    pub fn scaled(&self, s: f64) -> Self {
        let pts = self.points.iter().map(|r| r * s).collect();
        Self::from_points(pts).expect("positive scaling keeps a valid grid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn r_min(&self) -> f64 {
        self.points[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// `∫_{r_0}^{r_N} g` plus the linear-model contribution `r_0 g(r_0)/2`
    /// of the gap `(0, r_0)`.
    pub fn integrate(&self, g: &[C64]) -> C64 {
        assert_eq!(g.len(), self.len());
        let mut sum = g[0] * (0.5 * self.points[0]);
        for c in &self.cells {
            for k in 0..4 {
                sum += g[c.start + k] * c.weights[k];
            }
        }
        sum
    }

    pub fn integrate_real(&self, g: &[f64]) -> f64 {
        assert_eq!(g.len(), self.len());
        let mut sum = g[0] * 0.5 * self.points[0];
        for c in &self.cells {
            for k in 0..4 {
                sum += g[c.start + k] * c.weights[k];
            }
        }
        sum
    }

    /// `L_i = ∫_0^{r_i} e^{-a (r_i - s)} g(s) ds` for every grid index.
    pub fn cumulative_exp_left(&self, a: C64, g: &[C64]) -> Vec<C64> {
        assert_eq!(g.len(), self.len());
        let mut out = Vec::with_capacity(g.len());
        let mut acc = g[0] * (0.5 * self.points[0]);
        out.push(acc);
        for c in &self.cells {
            let j = exp_moments(a, c.h);
            let e = (-a * c.h).exp();
            // K_m = ∫_0^h e^{-a(h-τ)} τ^m dτ = Σ_j C(m,j) h^{m-j} (-1)^j J_j
            let h = c.h;
            let kk = [
                j[0],
                j[0] * h - j[1],
                j[0] * h * h - j[1] * (2.0 * h) + j[2],
                j[0] * h * h * h - j[1] * (3.0 * h * h) + j[2] * (3.0 * h) - j[3],
            ];
            let mut cell = C64::new(0.0, 0.0);
            for k in 0..4 {
                let w: C64 = (0..4).map(|m| kk[m] * c.coef[k][m]).sum();
                cell += w * g[c.start + k];
            }
            acc = acc * e + cell;
            out.push(acc);
        }
        out
    }

    /// `U_i = ∫_{r_i}^{r_N} e^{-a (s - r_i)} g(s) ds` for every grid index.
    pub fn cumulative_exp_right(&self, a: C64, g: &[C64]) -> Vec<C64> {
        assert_eq!(g.len(), self.len());
        let n = self.len();
        let mut out = vec![C64::new(0.0, 0.0); n];
        let mut acc = C64::new(0.0, 0.0);
        for (i, c) in self.cells.iter().enumerate().rev() {
            let j = exp_moments(a, c.h);
            let e = (-a * c.h).exp();
            let mut cell = C64::new(0.0, 0.0);
            for k in 0..4 {
                let w: C64 = (0..4).map(|m| j[m] * c.coef[k][m]).sum();
                cell += w * g[c.start + k];
            }
            acc = acc * e + cell;
            out[i] = acc;
        }
        out
    }
}

fn check_range(r_min: f64, r_max: f64) -> Result<()> {
    if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
        return Err(Error::Invalid(format!(
            "need 0 < r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    Ok(())
}

/// `J_m = ∫_0^h e^{-aτ} τ^m dτ`, m = 0..3.
fn exp_moments(a: C64, h: f64) -> [C64; 4] {
    let x = a * h;
    if x.norm() < 1.0 {
        let mut out = [C64::new(0.0, 0.0); 4];
        for (m, slot) in out.iter_mut().enumerate() {
            let mut term = C64::new(1.0, 0.0);
            let mut sum = C64::new(1.0 / (m as f64 + 1.0), 0.0);
            for n in 1..40 {
                term = term * (-x) / n as f64;
                let t = term / (n + m + 1) as f64;
                sum += t;
                if t.norm() < 1e-18 {
                    break;
                }
            }
            *slot = sum * h.powi(m as i32 + 1);
        }
        return out;
    }
    let e = (-x).exp();
    let mut out = [C64::new(0.0, 0.0); 4];
    out[0] = (1.0 - e) / a;
    for m in 1..4 {
        out[m] = (out[m - 1] * m as f64 - e * h.powi(m as i32)) / a;
    }
    out
}

/// Finite-difference weights (Fornberg) for the derivatives of order
/// `0..=order` at `x0` from the nodes `xs`. Returns `w[d][j]`.
pub fn fornberg_weights(x0: f64, xs: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    c
}

/// Complex values sampled on a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    grid: Arc<RadialGrid>,
    values: Vec<C64>,
}

impl RadialFunction {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Invalid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(RadialFunction { grid, values })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> C64) -> Self {
        let values = grid.points().iter().map(|&r| f(r)).collect();
        RadialFunction { grid, values }
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![C64::new(0.0, 0.0); grid.len()];
        RadialFunction { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn points(&self) -> &[f64] {
        self.grid.points()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn spacing(&self) -> Spacing {
        self.grid.spacing()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same grid, values transformed pointwise.
    pub fn map(&self, f: impl Fn(f64, C64) -> C64) -> Self {
        let values = self.points().iter().zip(&self.values).map(|(&r, &v)| f(r, v)).collect();
        RadialFunction {
            grid: self.grid.clone(),
            values,
        }
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && *self.grid != *other.grid {
            return Err(Error::Invalid("functions live on different grids".into()));
        }
        Ok(())
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: C64, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Ok(RadialFunction {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|_, v| v * c)
    }

    /// Hermitian inner product `∫ self · conj(other)`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.check_same_grid(other)?;
        let g: Vec<C64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .collect();
        Ok(self.grid.integrate(&g))
    }

    /// Bilinear pairing `∫ self · other` (no conjugation).
    pub fn pairing(&self, other: &Self) -> Result<C64> {
        self.check_same_grid(other)?;
        let g: Vec<C64> = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(self.grid.integrate(&g))
    }

    /// L² norm.
    pub fn norm(&self) -> f64 {
        let g: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        self.grid.integrate_real(&g).max(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Second derivative from five-point Fornberg stencils, at indices
    /// `2..len-2` (entries outside that range are `None`).
    pub fn second_derivative(&self) -> Vec<Option<C64>> {
        let r = self.points();
        let n = r.len();
        (0..n)
            .map(|i| {
                if i < 2 || i + 2 >= n {
                    return None;
                }
                let xs = &r[i - 2..=i + 2];
                let w = fornberg_weights(r[i], xs, 2);
                Some((0..5).map(|k| self.values[i - 2 + k] * w[2][k]).sum())
            })
            .collect()
    }

    /// Writes the `r,re,im` CSV representation.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,re,im")?;
        for (r, v) in self.points().iter().zip(&self.values) {
            writeln!(out, "{:.17e},{:.17e},{:.17e}", r, v.re, v.im)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Invalid("empty RadialFunction CSV".into()))??;
        let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
        if cols != ["r", "re", "im"] {
            return Err(Error::Invalid(format!("expected header r,re,im, got {header:?}")));
        }
        let mut pts = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Invalid(format!("line {}: expected 3 fields", lineno + 2)));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Invalid(format!("line {}: {e}", lineno + 2)))
            };
            pts.push(parse(fields[0])?);
            values.push(C64::new(parse(fields[1])?, parse(fields[2])?));
        }
        let grid = Arc::new(RadialGrid::from_points(pts)?);
        RadialFunction::new(grid, values)
    }
}
