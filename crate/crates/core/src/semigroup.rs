//! Time evolution `T_A(t) f` for generating extensions by contour integration
//! of the resolvent, `T(t) f = (2πi)^{-1} ∫_Γ e^{λt} (λ + L_A)^{-1} f dλ`.
//!
//! `Γ` is the hyperbola `λ(u) = μ(1 + sin(iu - α))`, rotated by `-arg t`, and
//! the integral is the trapezoid rule in `u`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::extensions::{classify, ExtensionParams};
use crate::radial::{RadialFunction, RadialGrid};
use crate::resolvent::{log_bump, ExtensionResolvent, Resolvent};
use crate::C64;

/// Parameters of one discretized hyperbolic contour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    /// Scale `μ` (so `λ(0) = μ(1 - sin α)` before rotation).
    pub mu: f64,
    /// Half-opening offset: the asymptotes make angles `±(π/2 + α)`.
    pub alpha: f64,
    /// Trapezoid step in `u`.
    pub step: f64,
    /// Nodes `u_k = k·step` for `|k| ≤ half_count`.
    pub half_count: usize,
    /// Rotation `e^{-i arg t}` applied to `λ(u)`.
    pub rotation: f64,
}

impl Contour {
    /// Contour for time `t` with analyticity half-angle `theta_a`, using
    /// `nodes` trapezoid points.
    ///
    /// The shifted contours `α ± d` stay inside `(0, θ_A - |arg t|)`; `μ` and
    /// the step balance the discretization error `e^{μ|t| - 2πd/h}` against
    /// the truncation error `e^{μ|t|(1 - sin α cosh(N h))}`.
    pub fn for_time(theta_a: f64, t: C64, nodes: usize) -> Result<Self> {
        let phi = t.arg();
        let room = theta_a - phi.abs();
        if !(t.norm() > 0.0) || !(room > 0.0) {
            return Err(Error::Domain(format!(
                "time {t} must be nonzero with |arg t| < θ_A = {theta_a}"
            )));
        }
        let alpha = room / 2.0;
        let d = room / 2.0;
        let half_count = (nodes / 2).max(2);
        let n = half_count as f64;
        let exponent = |h: f64| -> f64 { (2.0 * PI * d / h) * (1.0 / (alpha.sin() * (n * h).cosh()) - 1.0) };
        // golden-section search for the step minimizing the error exponent
        let (mut lo, mut hi) = (1e-3 / n, 6.0 / n);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if exponent(x1) < exponent(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        let step = 0.5 * (lo + hi);
        let m = 2.0 * PI * d / (step * alpha.sin() * (n * step).cosh());
        Ok(Contour {
            mu: m / t.norm(),
            alpha,
            step,
            half_count,
            rotation: -phi,
        })
    }

    /// Estimated error exponent: the quadrature error is about `e^{value}`.
    pub fn error_exponent(&self, t: C64) -> f64 {
        let n = self.half_count as f64;
        self.mu * t.norm() * (1.0 - self.alpha.sin() * (n * self.step).cosh())
    }

    /// Nodes `λ_k` and trapezoid weights `h λ'(u_k) e^{λ_k t}/(2πi)`.
    pub fn nodes(&self, t: C64) -> Vec<(C64, C64)> {
        let rot = C64::from_polar(1.0, self.rotation);
        let n = self.half_count as i64;
        (-n..=n)
            .map(|k| {
                let u = k as f64 * self.step;
                let arg = C64::new(-self.alpha, u);
                let lam = rot * self.mu * (1.0 + arg.sin());
                let dlam = rot * self.mu * C64::new(0.0, 1.0) * arg.cos();
                let w = dlam * (lam * t).exp() * self.step / C64::new(0.0, 2.0 * PI);
                (lam, w)
            })
            .collect()
    }
}

/// Settings for [`evolve`].
#[derive(Debug, Clone, Copy)]
pub struct EvolutionConfig {
    pub a: ExtensionParams,
    pub nu: f64,
    /// Initial node count; doubled while the error estimate exceeds `tolerance`.
    pub nodes: usize,
    pub max_nodes: usize,
    /// Relative L² tolerance on the step-h against step-2h estimate.
    pub tolerance: f64,
    pub policy: ExecPolicy,
}

impl EvolutionConfig {
    pub fn new(a: ExtensionParams, nu: f64) -> Self {
        EvolutionConfig {
            a,
            nu,
            nodes: 64,
            max_nodes: 512,
            tolerance: 1e-6,
            policy: ExecPolicy::default(),
        }
    }

    /// `θ_A`, or the not-a-generator error for Cases I and II.
    pub fn theta_a(&self) -> Result<f64> {
        let inv = classify(&self.a, self.nu);
        inv.theta_a.ok_or_else(|| {
            Error::NotGenerator(format!(
                "A = {} is Case {} (|κ| = {}) and does not generate a semigroup",
                self.a, inv.case_label, inv.kappa_mod
            ))
        })
    }
}

/// Result of an evolution with its doubling error estimate.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub u: RadialFunction,
    pub nodes: usize,
    /// `‖u_h - u_{2h}‖ / ‖u_h‖` between the trapezoid sums on the final contour.
    pub error_estimate: f64,
}

/// Contour quadrature of `e^{λt} R(-λ) f` with a fixed node count, together
/// with the trapezoid sum over every other node (step `2h`, same contour).
pub fn evolve_pair<R: Resolvent>(
    op: &R,
    theta_a: f64,
    t: C64,
    f: &RadialFunction,
    nodes: usize,
    policy: ExecPolicy,
) -> Result<(RadialFunction, RadialFunction)> {
    let contour = Contour::for_time(theta_a, t, nodes)?;
    let pts = contour.nodes(t);
    let terms = policy.try_map(&pts, |&(lam, w)| {
        if w.norm() == 0.0 || !w.re.is_finite() {
            return Ok(None);
        }
        op.apply(-lam, f).map(|u| Some((w, u)))
    })?;
    let n = f.len();
    let mut fine = vec![C64::new(0.0, 0.0); n];
    let mut coarse = vec![C64::new(0.0, 0.0); n];
    let parity = contour.half_count % 2;
    for (k, term) in terms.into_iter().enumerate() {
        let Some((w, u)) = term else { continue };
        let on_coarse = k % 2 == parity;
        for ((a, b), v) in fine.iter_mut().zip(coarse.iter_mut()).zip(u.values()) {
            let x = w * v;
            *a += x;
            if on_coarse {
                *b += x * 2.0;
            }
        }
    }
    Ok((
        RadialFunction::new(f.grid().clone(), fine)?,
        RadialFunction::new(f.grid().clone(), coarse)?,
    ))
}

/// Single contour quadrature with a fixed node count.
pub fn evolve_fixed<R: Resolvent>(
    op: &R,
    theta_a: f64,
    t: C64,
    f: &RadialFunction,
    nodes: usize,
    policy: ExecPolicy,
) -> Result<RadialFunction> {
    Ok(evolve_pair(op, theta_a, t, f, nodes, policy)?.0)
}

/// Contour evolution for any resolvent family with analyticity angle
/// `theta_a`. The error estimate compares the trapezoid sums with steps `h`
/// and `2h`; the node count doubles until it is below `tolerance`.
#[allow(clippy::too_many_arguments)]
pub fn evolve_with<R: Resolvent>(
    op: &R,
    theta_a: f64,
    t: C64,
    f: &RadialFunction,
    nodes: usize,
    max_nodes: usize,
    tolerance: f64,
    policy: ExecPolicy,
) -> Result<Evolution> {
    let mut n = nodes.max(4);
    loop {
        let (fine, coarse) = evolve_pair(op, theta_a, t, f, n, policy)?;
        let scale = fine.norm().max(f.norm() * f64::EPSILON);
        let estimate = fine.sub(&coarse)?.norm() / scale;
        if estimate < tolerance {
            return Ok(Evolution {
                u: fine,
                nodes: n,
                error_estimate: estimate,
            });
        }
        if n >= max_nodes {
            return Err(Error::QuadratureTolerance { estimate, tolerance });
        }
        n *= 2;
    }
}

/// `T_A(t) f` for a generating extension (Cases III and IV).
pub fn evolve(cfg: &EvolutionConfig, t: C64, f: &RadialFunction) -> Result<Evolution> {
    let theta_a = cfg.theta_a()?;
    let op = ExtensionResolvent {
        a: cfg.a,
        nu: cfg.nu,
        policy: ExecPolicy::Sequential,
    };
    evolve_with(&op, theta_a, t, f, cfg.nodes, cfg.max_nodes, cfg.tolerance, cfg.policy)
}

/// `(I_s u)(r) = s^{1/2} u(s r)`, by cubic interpolation in `ln r` on the grid
/// of `u` and zero outside its range.
pub fn dilate(u: &RadialFunction, s: f64) -> RadialFunction {
    let pts = u.points();
    let n = pts.len();
    let logs: Vec<f64> = pts.iter().map(|r| r.ln()).collect();
    let vals = u.values();
    let sample = |r: f64| -> C64 {
        let x = r.ln();
        if x < logs[0] - 1e-12 || x > logs[n - 1] + 1e-12 {
            return C64::new(0.0, 0.0);
        }
        let k = logs.partition_point(|&y| y <= x).saturating_sub(1);
        if (logs[k] - x).abs() <= 1e-12 {
            return vals[k];
        }
        let lo = k.saturating_sub(1).min(n - 4);
        let mut out = C64::new(0.0, 0.0);
        for i in 0..4 {
            let mut w = 1.0;
            for j in 0..4 {
                if i != j {
                    w *= (x - logs[lo + j]) / (logs[lo + i] - logs[lo + j]);
                }
            }
            out += vals[lo + i] * w;
        }
        out
    };
    let sq = s.sqrt();
    RadialFunction::from_fn(u.grid().clone(), |r| sample(s * r) * sq)
}

/// A probe whose norm grows under the semigroup.
#[derive(Debug, Clone)]
pub struct NonContractionWitness {
    pub f: RadialFunction,
    pub t: f64,
    pub ratio: f64,
    /// Center and log-width of the probe `r^{1/2} g(ln(r/r₀))`.
    pub center: f64,
    pub width: f64,
}

/// Probe centres `r₀` for [`noncontractivity_witness`]: the scaling-group
/// orbit `e^{mπ/ν}` for `m = 0, ±1, …`, clipped to the grid interior.
pub fn probe_centres(nu: f64, grid: &RadialGrid, count: usize) -> Vec<f64> {
    let (lo, hi) = (grid.r_min(), grid.r_max());
    let mut out = Vec::new();
    let mut m: i64 = 0;
    while out.len() < count && m.abs() < 64 {
        let r0 = (m as f64 * PI / nu).exp();
        if r0 > lo * 1e4 && r0 < hi * 1e-2 {
            out.push(r0);
        }
        m = if m <= 0 { -m + 1 } else { -m };
    }
    out
}

/// Searches `‖T(t) f‖ / ‖f‖ > 1` over log-Gaussian probes centred on
/// [`probe_centres`] and times `t_grid`; `None` when no probe grows.
pub fn noncontractivity_witness(
    cfg: &EvolutionConfig,
    grid: Arc<RadialGrid>,
    t_grid: &[f64],
    probe_count: usize,
) -> Result<Option<NonContractionWitness>> {
    let theta_a = cfg.theta_a()?;
    let op = ExtensionResolvent {
        a: cfg.a,
        nu: cfg.nu,
        policy: ExecPolicy::Sequential,
    };
    // wide enough in ln r that ∫ g'² < ν² ∫ g², so ⟨L f, f⟩ < 0
    let width = 2.0 / cfg.nu.min(1.0);
    let probes: Vec<(f64, f64)> = probe_centres(cfg.nu, &grid, probe_count)
        .into_iter()
        .map(|r0| (r0, width))
        .collect();
    let search = WitnessSearch {
        theta_a,
        nodes: cfg.nodes,
        max_nodes: cfg.max_nodes,
        tolerance: cfg.tolerance,
        policy: cfg.policy,
    };
    search.run(&op, grid, &probes, t_grid)
}

/// Contour settings for a probe search with an arbitrary [`Resolvent`].
#[derive(Debug, Clone, Copy)]
pub struct WitnessSearch {
    pub theta_a: f64,
    pub nodes: usize,
    pub max_nodes: usize,
    pub tolerance: f64,
    pub policy: ExecPolicy,
}

impl WitnessSearch {
    /// Evolves `log_bump(r0, width)` for each probe over the times
    /// `t · r0²` and keeps the largest norm ratio above one.
    pub fn run<R: Resolvent>(
        &self,
        op: &R,
        grid: Arc<RadialGrid>,
        probes: &[(f64, f64)],
        t_grid: &[f64],
    ) -> Result<Option<NonContractionWitness>> {
        let mut best: Option<NonContractionWitness> = None;
        for &(r0, width) in probes {
            let f = log_bump(grid.clone(), r0, width);
            let fnorm = f.norm();
            for &t in t_grid {
                let time = C64::new(t * r0 * r0, 0.0);
                let ev = evolve_with(
                    op,
                    self.theta_a,
                    time,
                    &f,
                    self.nodes,
                    self.max_nodes,
                    self.tolerance,
                    self.policy,
                )?;
                let ratio = ev.u.norm() / fnorm;
                if ratio > 1.0 && best.as_ref().is_none_or(|b| ratio > b.ratio) {
                    best = Some(NonContractionWitness {
                        f: f.clone(),
                        t: time.re,
                        ratio,
                        center: r0,
                        width,
                    });
                }
            }
        }
        Ok(best)
    }
}

/// One row of a norm trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub norm_ratio: f64,
}

/// `‖T(t) f‖ / ‖f‖` at each time.
pub fn norm_trace(cfg: &EvolutionConfig, f: &RadialFunction, times: &[f64]) -> Result<Vec<TracePoint>> {
    let fnorm = f.norm();
    times
        .iter()
        .map(|&t| {
            let ev = evolve(cfg, C64::new(t, 0.0), f)?;
            Ok(TracePoint {
                t,
                norm_ratio: ev.u.norm() / fnorm,
            })
        })
        .collect()
}

/// Writes a trace as CSV with header `t,norm_ratio`.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &[TracePoint]) -> Result<()> {
    writeln!(out, "t,norm_ratio")?;
    for p in trace {
        writeln!(out, "{:.17e},{:.17e}", p.t, p.norm_ratio)?;
    }
    Ok(())
}
