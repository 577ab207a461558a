//! Green kernel, the integral operator `T_ω` and the resolvent
//! `R(z) = (L_A - z)^{-1} = (ω² + L_A)^{-1}`, `ω = √(-z)`, `Re ω > 0`.
//!
//! `R(z) f = c (∫ φ_{ω,0} f) φ_{ω,0} + T_ω f`, where
//! `T_ω f(r) = W^{-1} [φ_{ω,0}(r) ∫_0^r φ_{ω,1} f + φ_{ω,1}(r) ∫_r^∞ φ_{ω,0} f]`
//! and `c` is fixed by the boundary condition of `A`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::extensions::ExtensionParams;
use crate::radial::{fornberg_weights, RadialFunction, RadialGrid};
use crate::solutions::{extract_boundary_coefficients, SolutionPair, SpectralOmega};

/// Relative size of the boundary determinant below which `z` is treated as
/// an eigenvalue.
pub const SPECTRUM_HIT_TOL: f64 = 1e-12;

/// Anything that can apply `(L - z)^{-1}` to sampled functions. Implemented
/// by the extensions `L_A` and by the Friedrichs blocks of the N-d reduction.
pub trait Resolvent: Sync {
    fn apply(&self, z: C64, f: &RadialFunction) -> Result<RadialFunction>;

    /// The resolvent of the adjoint operator, `R*(z̄)`, if available.
    fn apply_adjoint(&self, z: C64, f: &RadialFunction) -> Result<RadialFunction>;
}

/// `G_ω(r, s) = W^{-1} φ_{ω,0}(max(r,s)) φ_{ω,1}(min(r,s))`.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    pair: SolutionPair,
    wronskian: C64,
    policy: ExecPolicy,
}

impl GreenKernel {
    pub fn new(nu: f64, omega: SpectralOmega) -> Result<Self> {
        let pair = SolutionPair::new(nu, omega)?;
        let wronskian = pair.wronskian_closed_form();
        if !(wronskian.norm() > 0.0) {
            return Err(Error::Domain("vanishing Wronskian".into()));
        }
        Ok(GreenKernel {
            pair,
            wronskian,
            policy: ExecPolicy::default(),
        })
    }

    pub fn with_policy(mut self, policy: ExecPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn nu(&self) -> f64 {
        self.pair.nu()
    }

    pub fn omega(&self) -> SpectralOmega {
        self.pair.omega()
    }

    pub fn wronskian(&self) -> C64 {
        self.wronskian
    }

    pub fn pair(&self) -> &SolutionPair {
        &self.pair
    }

    pub fn eval(&self, r: f64, s: f64) -> Result<C64> {
        let (lo, hi) = if r <= s { (r, s) } else { (s, r) };
        let a = self.pair.scaled_at(hi)?;
        let b = self.pair.scaled_at(lo)?;
        let w = self.omega().omega();
        Ok(a.q * b.p * (-w * (hi - lo)).exp() / self.wronskian)
    }

    /// `T_ω f` on the grid of `f`.
    pub fn apply_t(&self, f: &RadialFunction) -> Result<RadialFunction> {
        let grid = f.grid();
        let (q, p) = self.pair.sample_scaled(grid, self.policy)?;
        Ok(self.apply_t_sampled(f, &q, &p))
    }

    fn apply_t_sampled(&self, f: &RadialFunction, q: &[C64], p: &[C64]) -> RadialFunction {
        green_apply_sampled(f, self.omega().omega(), self.wronskian, q, p)
    }
}

/// `W^{-1} [φ₀(r) ∫_0^r φ₁ f + φ₁(r) ∫_r^∞ φ₀ f]` from the scaled samples
/// `q = e^{ωr} φ₀`, `p = e^{-ωr} φ₁` on the grid of `f`, by exponentially
/// weighted product quadrature.
pub(crate) fn green_apply_sampled(f: &RadialFunction, w: C64, wronskian: C64, q: &[C64], p: &[C64]) -> RadialFunction {
    let grid = f.grid();
    let fv = f.values();
    let pf: Vec<C64> = p.iter().zip(fv).map(|(a, b)| a * b).collect();
    let qf: Vec<C64> = q.iter().zip(fv).map(|(a, b)| a * b).collect();
    let left = grid.cumulative_exp_left(w, &pf);
    let right = grid.cumulative_exp_right(w, &qf);
    let values = (0..fv.len())
        .map(|i| (q[i] * left[i] + p[i] * right[i]) / wronskian)
        .collect();
    RadialFunction::new(grid.clone(), values).expect("same grid")
}

/// `T_ω f` with a fresh kernel.
pub fn apply_t(nu: f64, omega: SpectralOmega, f: &RadialFunction) -> Result<RadialFunction> {
    GreenKernel::new(nu, omega)?.apply_t(f)
}

/// A resolvent evaluation point `z` for a given `A`, with the rank-one
/// coefficient `c`.
#[derive(Debug, Clone)]
pub struct ResolventQuery {
    a: ExtensionParams,
    z: C64,
    c: C64,
    kernel: GreenKernel,
}

impl ResolventQuery {
    pub fn new(a: ExtensionParams, nu: f64, z: C64) -> Result<Self> {
        let omega = SpectralOmega::from_z(z)?;
        if !(omega.omega().re > 0.0) {
            return Err(Error::Domain(format!("z = {z} lies on the continuous spectrum")));
        }
        let kernel = GreenKernel::new(nu, omega)?;
        let c = rank_one_coefficient(&a, &kernel.pair, kernel.wronskian, z)?;
        Ok(ResolventQuery { a, z, c, kernel })
    }

    pub fn with_policy(mut self, policy: ExecPolicy) -> Self {
        self.kernel = self.kernel.with_policy(policy);
        self
    }

    pub fn params(&self) -> &ExtensionParams {
        &self.a
    }

    pub fn z(&self) -> C64 {
        self.z
    }

    pub fn omega(&self) -> SpectralOmega {
        self.kernel.omega()
    }

    pub fn c(&self) -> C64 {
        self.c
    }

    pub fn kernel(&self) -> &GreenKernel {
        &self.kernel
    }

    /// `u = R(z) f` on the grid of `f`.
    pub fn apply(&self, f: &RadialFunction) -> Result<RadialFunction> {
        let grid = f.grid();
        let (q, p) = self.kernel.pair.sample_scaled(grid, self.kernel.policy)?;
        let t = self.kernel.apply_t_sampled(f, &q, &p);
        let w = self.omega().omega();
        let phi0: Vec<C64> = q.iter().zip(grid.points()).map(|(q, &r)| q * (-w * r).exp()).collect();
        let g: Vec<C64> = phi0.iter().zip(f.values()).map(|(a, b)| a * b).collect();
        let c0 = self.c * grid.integrate(&g);
        let values = t.values().iter().zip(&phi0).map(|(t, p)| t + c0 * p).collect();
        RadialFunction::new(grid.clone(), values)
    }

    /// Cross-ratio `|c₊ a₂ - c₋ a₁| / (|c₊|+|c₋|)(|a₁|+|a₂|)` between the boundary
    /// amplitudes of `u` and the amplitudes `A` prescribes (0 when `u` lies in
    /// the domain). Requires a grid reaching `|ω| r ≲ 1e-4`.
    pub fn boundary_mismatch(&self, u: &RadialFunction) -> Result<f64> {
        let bc = extract_boundary_coefficients(u, self.kernel.nu())?;
        Ok(domain_cross_ratio(&self.a, bc.c_plus, bc.c_minus))
    }
}

/// Cross-ratio between boundary amplitudes `(c₊, c₋)` and `A`.
pub fn domain_cross_ratio(a: &ExtensionParams, c_plus: C64, c_minus: C64) -> f64 {
    let scale = (c_plus.norm() + c_minus.norm()) * (a.a1().norm() + a.a2().norm());
    if scale == 0.0 {
        return 0.0;
    }
    (c_plus * a.a2() - c_minus * a.a1()).norm() / scale
}

fn rank_one_coefficient(a: &ExtensionParams, pair: &SolutionPair, w: C64, z: C64) -> Result<C64> {
    // φ₀ ≈ ω^{1/2}(P r^{1/2+iν} + Q r^{1/2-iν}), φ₁ ≈ ω^{1/2}(P r^{1/2+iν} - Q r^{1/2-iν})
    let (cp, cm) = pair.boundary_model(0);
    let (p, q) = (cp, cm);
    let det = p * a.a2() - q * a.a1();
    let scale = p.norm() * a.a2().norm() + q.norm() * a.a1().norm();
    if det.norm() < SPECTRUM_HIT_TOL * scale {
        return Err(Error::SpectrumHit {
            re: z.re,
            im: z.im,
            det: det.norm() / scale,
        });
    }
    Ok(-(p * a.a2() + q * a.a1()) / (w * det))
}

/// `R_A(z) f`.
pub fn resolvent_apply(a: &ExtensionParams, nu: f64, z: C64, f: &RadialFunction) -> Result<RadialFunction> {
    ResolventQuery::new(*a, nu, z)?.apply(f)
}

/// [`Resolvent`] for a fixed extension `L_A`.
#[derive(Debug, Clone, Copy)]
pub struct ExtensionResolvent {
    pub a: ExtensionParams,
    pub nu: f64,
    pub policy: ExecPolicy,
}

impl ExtensionResolvent {
    pub fn new(a: ExtensionParams, nu: f64) -> Self {
        ExtensionResolvent {
            a,
            nu,
            policy: ExecPolicy::default(),
        }
    }
}

impl Resolvent for ExtensionResolvent {
    fn apply(&self, z: C64, f: &RadialFunction) -> Result<RadialFunction> {
        ResolventQuery::new(self.a, self.nu, z)?
            .with_policy(self.policy)
            .apply(f)
    }

    fn apply_adjoint(&self, z: C64, f: &RadialFunction) -> Result<RadialFunction> {
        ResolventQuery::new(self.a.adjoint(), self.nu, z.conj())?
            .with_policy(self.policy)
            .apply(f)
    }
}

/// Relative residual of `ω² u - u'' + b u / r² = f`, i.e. `(L - z) u = f`.
/// The check runs in `t = ln r` on `y = r^{-1/2} u`, where the equation reads
/// `ω² r² y - y_tt + (b + 1/4) y = r^{3/2} f`; five-point Fornberg stencils in
/// `t` stay symmetric on the log-spaced part of a grid. Each point is scaled
/// by the largest term over its stencil, so isolated zeros of `u` do not
/// inflate the ratio. Points whose scale is below `1e-10` of the largest are
/// skipped, as are points where rounding in the stencil sum alone could add
/// more than `1e-8` to the ratio (for `b = -1/4` near `r = 0` every term is
/// tiny next to `y` itself). Returns the maximum over the remaining interior
/// points.
pub fn ode_residual(u: &RadialFunction, f: &RadialFunction, z: C64, b: f64) -> Result<f64> {
    if u.grid() != f.grid() && **u.grid() != **f.grid() {
        return Err(Error::Invalid("u and f live on different grids".into()));
    }
    let r = u.points();
    let n = r.len();
    let t: Vec<f64> = r.iter().map(|x| x.ln()).collect();
    let y: Vec<C64> = u.values().iter().zip(r).map(|(v, x)| v / x.sqrt()).collect();
    let w2 = -z;
    let source: Vec<C64> = f.values().iter().zip(r).map(|(v, x)| v * x.powf(1.5)).collect();
    let size: Vec<f64> = (0..n)
        .map(|i| {
            (w2 * r[i] * r[i] * y[i])
                .norm()
                .max((y[i] * (b + 0.25)).norm())
                .max(source[i].norm())
        })
        .collect();
    let mut rows = Vec::with_capacity(n);
    for i in 2..n.saturating_sub(2) {
        let wts = fornberg_weights(t[i], &t[i - 2..=i + 2], 2);
        let ytt: C64 = (0..5).map(|k| y[i - 2 + k] * wts[2][k]).sum();
        let res = (w2 * r[i] * r[i] * y[i] - ytt + y[i] * (b + 0.25) - source[i]).norm();
        let scale = size[i - 2..=i + 2].iter().fold(ytt.norm(), |m, &s| m.max(s));
        let roundoff = f64::EPSILON * (0..5).map(|k| (y[i - 2 + k] * wts[2][k]).norm()).sum::<f64>();
        rows.push((res, scale, roundoff));
    }
    let top = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(rows
        .iter()
        .filter(|(_, d, eps)| *d > 1e-10 * top && *eps <= 1e-8 * d)
        .map(|(res, d, _)| res / d)
        .fold(0.0, f64::max))
}

/// Smooth log-scale bump `r^{1/2} exp(-(ln(r/r₀))² / (2 w²))`.
pub fn log_bump(grid: Arc<RadialGrid>, r0: f64, width: f64) -> RadialFunction {
    RadialFunction::from_fn(grid, move |r| {
        let x = (r / r0).ln() / width;
        C64::new(r.sqrt() * (-0.5 * x * x).exp(), 0.0)
    })
}

/// Lower bound on `‖R_A(z)‖` from power iteration on `R*R` started at a set
/// of probe functions (`φ_{ω,0}` and log-bumps at several scales).
pub fn resolvent_norm_estimate(a: &ExtensionParams, nu: f64, z: C64, probe_count: usize) -> Result<f64> {
    let omega = SpectralOmega::from_z(z)?;
    let grid = Arc::new(RadialGrid::for_scale(omega.mu(), 60.0 * omega.mu() / omega.omega().re)?);
    let op = ExtensionResolvent::new(*a, nu);
    norm_estimate_on_grid(&op, z, &grid, probe_count, omega)
}

/// [`resolvent_norm_estimate`] for any [`Resolvent`] on a caller-supplied grid.
pub fn norm_estimate_on_grid<R: Resolvent>(
    op: &R,
    z: C64,
    grid: &Arc<RadialGrid>,
    probe_count: usize,
    omega: SpectralOmega,
) -> Result<f64> {
    let probes = probe_functions(grid, omega, probe_count.max(1));
    let mut best: f64 = 0.0;
    for mut f in probes {
        let n0 = f.norm();
        if n0 == 0.0 {
            continue;
        }
        f = f.scale(C64::new(1.0 / n0, 0.0));
        for _ in 0..6 {
            let u = op.apply(z, &f)?;
            let ratio = u.norm();
            best = best.max(ratio);
            let v = op.apply_adjoint(z, &u)?;
            let nv = v.norm();
            if !(nv > 0.0) {
                break;
            }
            f = v.scale(C64::new(1.0 / nv, 0.0));
        }
    }
    Ok(best)
}

fn probe_functions(grid: &Arc<RadialGrid>, omega: SpectralOmega, count: usize) -> Vec<RadialFunction> {
    let mut out = Vec::with_capacity(count);
    let w = omega.omega();
    out.push(RadialFunction::from_fn(grid.clone(), |r| {
        let x = w * r;
        x.sqrt() * (-x).exp()
    }));
    let scale = 1.0 / omega.mu();
    for k in 1..count {
        // scales spread over two decades around 1/|ω|
        let t = k as f64 / count as f64;
        let r0 = scale * 10f64.powf(-1.0 + 2.0 * t);
        out.push(log_bump(grid.clone(), r0, 0.6));
    }
    out
}

/// JSON report of one resolvent application.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventReport {
    pub z: [f64; 2],
    pub omega: [f64; 2],
    pub c: [f64; 2],
    pub residual: f64,
    pub norm_estimate: f64,
}
