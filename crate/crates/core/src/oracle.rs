//! Independent verifiers for the closed forms: a Picard fixed-point
//! construction of the decaying solution, complex shooting for eigenvalues
//! and a domain-membership test on boundary amplitudes.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::extensions::{ExtensionParams, Source, SpectralPoint, EIGEN_RESIDUAL_TOL};
use crate::ode::{decaying_boundary_amplitudes, OdeConfig};
use crate::radial::{RadialFunction, RadialGrid};
use crate::resolvent::domain_cross_ratio;
use crate::solutions::extract_boundary_coefficients;
use crate::C64;

/// Controls for [`picard_h0`].
#[derive(Debug, Clone, Copy)]
pub struct PicardConfig {
    /// Number of log-spaced nodes on `[R, R · span]`.
    pub nodes: usize,
    /// Ratio between the last and first node radius.
    pub span: f64,
    pub max_iterations: usize,
    /// Stop once the sup-distance between successive iterates drops below this.
    pub tolerance: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            nodes: 1024,
            span: 1e6,
            max_iterations: 200,
            tolerance: 1e-10,
        }
    }
}

/// Fixed point `h₀` of the Picard map on the ray `{ρ e^{iθ} : ρ ≥ R}`, so that
/// `e^{-z} h₀(z)` is the decaying solution of `φ'' = (1 + b/z²) φ`.
#[derive(Debug, Clone)]
pub struct PicardSolution {
    pub angle: f64,
    pub b: f64,
    pub radius: f64,
    /// Node radii `ρ_k` (the points are `ρ_k e^{iθ}`).
    pub rho: Vec<f64>,
    pub h: Vec<C64>,
    pub iterations: usize,
    /// Sup-distance between successive iterates.
    pub distances: Vec<f64>,
    /// `‖h₀ - 1‖_sup`.
    pub deviation: f64,
}

impl PicardSolution {
    /// Ratios of consecutive iterate distances.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.distances
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }

    /// `e^{-z} h₀(z)` at node `k`.
    pub fn decaying_at(&self, k: usize) -> C64 {
        let z = C64::from_polar(self.rho[k], self.angle);
        (-z).exp() * self.h[k]
    }

    /// Cubic interpolation of `h₀` in `ln ρ` (exact at nodes).
    pub fn h_at(&self, rho: f64) -> Result<C64> {
        let n = self.rho.len();
        if !(rho >= self.rho[0] && rho <= self.rho[n - 1]) {
            return Err(Error::Domain(format!(
                "ρ = {rho} outside the Picard range [{}, {}]",
                self.rho[0],
                self.rho[n - 1]
            )));
        }
        let k = self.rho.partition_point(|&x| x <= rho).saturating_sub(1).min(n - 2);
        let lo = k.saturating_sub(1).min(n - 4);
        let xs: Vec<f64> = self.rho[lo..lo + 4].iter().map(|r| r.ln()).collect();
        let x = rho.ln();
        let mut out = C64::new(0.0, 0.0);
        for i in 0..4 {
            let mut w = 1.0;
            for j in 0..4 {
                if i != j {
                    w *= (x - xs[j]) / (xs[i] - xs[j]);
                }
            }
            out += self.h[lo + i] * w;
        }
        Ok(out)
    }
}

/// Iterates `T h(z) = 1 + ∫_z^∞ b (1 - e^{-2(η - z)}) / (2η²) h(η) dη` along
/// the ray `arg z = angle` from `ρ = R` outward, starting at `h = 1`.
///
/// The kernel `e^{-2(η-z)}` factor is integrated exactly against the cubic
/// interpolant of `h/η²` on each cell; the tail beyond the last node uses
/// `h(η) ≈ 1 + d ρ_N/ρ`, matched at the last node.
pub fn picard_h0(nu: f64, b: f64, angle: f64, radius: f64, cfg: &PicardConfig) -> Result<PicardSolution> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("ν must be positive, got {nu}")));
    }
    if !(angle.abs() < PI / 2.0) {
        return Err(Error::Domain(format!("ray angle {angle} must satisfy |angle| < π/2")));
    }
    let required = 2.0 * b.abs();
    if !(radius >= required) || !(radius > 0.0) {
        return Err(Error::NonContraction { radius, required });
    }
    let grid = RadialGrid::log(radius, radius * cfg.span, cfg.nodes)?;
    let rho = grid.points().to_vec();
    let n = rho.len();
    let rot = C64::from_polar(1.0, angle);
    // b η^{-2} dη = b e^{-iθ} ρ^{-2} dρ
    let pref = b * rot.conj() * 0.5;
    let decay = rot * 2.0;
    let rho_n = rho[n - 1];

    let apply = |h: &[C64]| -> Vec<C64> {
        let g: Vec<C64> = h.iter().zip(&rho).map(|(v, r)| v / (r * r)).collect();
        let plain = grid.cumulative_exp_right(C64::new(0.0, 0.0), &g);
        let damped = grid.cumulative_exp_right(decay, &g);
        let d = h[n - 1] - 1.0;
        let tail = (1.0 + d * 0.5) / rho_n;
        (0..n).map(|i| 1.0 + pref * (plain[i] + tail - damped[i])).collect()
    };

    let mut h = vec![C64::new(1.0, 0.0); n];
    let mut distances = Vec::new();
    for it in 1..=cfg.max_iterations {
        let next = apply(&h);
        let dist = next.iter().zip(&h).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        h = next;
        distances.push(dist);
        if dist < cfg.tolerance {
            let deviation = h.iter().map(|v| (v - 1.0).norm()).fold(0.0, f64::max);
            return Ok(PicardSolution {
                angle,
                b,
                radius,
                rho,
                h,
                iterations: it,
                distances,
                deviation,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iterations,
        residual: *distances.last().unwrap_or(&f64::NAN),
    })
}

/// Settings for [`shoot_eigenvalue`].
#[derive(Debug, Clone, Copy)]
pub struct ShootingConfig {
    pub ode: OdeConfig,
    /// `|ω| r` at which boundary amplitudes are read off.
    pub r_end_scaled: f64,
    pub max_iterations: usize,
    /// Target for the normalized determinant.
    pub tolerance: f64,
    /// Largest secant step in `ln ω`.
    pub max_step: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            ode: OdeConfig::default(),
            r_end_scaled: 1e-6,
            max_iterations: 60,
            tolerance: EIGEN_RESIDUAL_TOL,
            max_step: 0.5,
        }
    }
}

/// JSON-facing summary of one shooting run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub guess: C64,
    pub converged_z: C64,
    pub iterations: usize,
    pub determinant_residual: f64,
}

/// Normalized determinant `|c₊ a₂ - c₋ a₁| / ((|c₊| + |c₋|)(|a₁| + |a₂|))` for
/// the shot decaying solution at `ω`.
pub fn shooting_determinant(a: &ExtensionParams, nu: f64, omega: C64, cfg: &ShootingConfig) -> Result<f64> {
    let (cp, cm) = decaying_boundary_amplitudes(nu, omega, cfg.r_end_scaled, &cfg.ode)?;
    Ok(domain_cross_ratio(a, cp, cm))
}

/// Branch-wrapped `ln(c₊/c₋) - ln(a₁/a₂)`: zero exactly on eigenvalues, and
/// affine in `ln ω` between branch cuts.
fn log_mismatch(a: &ExtensionParams, nu: f64, zeta: C64, cfg: &ShootingConfig) -> Result<(C64, f64)> {
    let omega = zeta.exp();
    let (cp, cm) = decaying_boundary_amplitudes(nu, omega, cfg.r_end_scaled, &cfg.ode)?;
    if cp.norm() == 0.0 || cm.norm() == 0.0 {
        return Err(Error::IllConditioned(format!(
            "vanishing boundary amplitude at ω = {omega}"
        )));
    }
    let mut g = (cp / cm).ln() - (a.a1() / a.a2()).ln();
    g.im -= 2.0 * PI * (g.im / (2.0 * PI)).round();
    Ok((g, domain_cross_ratio(a, cp, cm)))
}

/// Ladder index of an eigenvalue: `round(ν ln μ / π)`.
fn ladder_index(nu: f64, z: C64) -> i64 {
    (nu * (0.5 * z.norm().ln()) / PI).round() as i64
}

/// Secant iteration in `ζ = ln ω` on the boundary-amplitude mismatch of the
/// inward-shot decaying solution. Eigenvalues need `a₁, a₂ ≠ 0`.
pub fn shoot_eigenvalue(
    a: &ExtensionParams,
    nu: f64,
    guess: C64,
    cfg: &ShootingConfig,
) -> Result<(SpectralPoint, OracleReport)> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("ν must be positive, got {nu}")));
    }
    if guess.im == 0.0 && guess.re >= 0.0 || !guess.re.is_finite() || !guess.im.is_finite() {
        return Err(Error::Domain(format!(
            "guess {guess} lies in the continuous spectrum [0, ∞)"
        )));
    }
    if a.a1().norm() == 0.0 || a.a2().norm() == 0.0 {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: f64::INFINITY,
        });
    }
    let omega0 = (-guess).sqrt();
    let mut z0 = omega0.ln();
    let mut z1 = z0 + C64::new(1e-3, 1e-3);
    let (mut g0, _) = log_mismatch(a, nu, z0, cfg)?;
    let (mut g1, mut det) = log_mismatch(a, nu, z1, cfg)?;
    for it in 1..=cfg.max_iterations {
        if det < cfg.tolerance * 0.01 || g1.norm() < 1e-14 {
            return finish(nu, guess, z1, it, det, cfg);
        }
        let slope = (g1 - g0) / (z1 - z0);
        if slope.norm() == 0.0 || !slope.re.is_finite() {
            break;
        }
        let mut step = -g1 / slope;
        if step.norm() > cfg.max_step {
            step *= cfg.max_step / step.norm();
        }
        let mut next = z1 + step;
        // keep Re ω > 0 (|arg ω| < π/2)
        while next.im.abs() >= PI / 2.0 {
            step *= 0.5;
            next = z1 + step;
        }
        let (gn, dn) = log_mismatch(a, nu, next, cfg)?;
        z0 = z1;
        g0 = g1;
        z1 = next;
        g1 = gn;
        det = dn;
        if step.norm() < 1e-15 * z1.norm().max(1.0) {
            return finish(nu, guess, z1, it, det, cfg);
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iterations,
        residual: det,
    })
}

fn finish(
    nu: f64,
    guess: C64,
    zeta: C64,
    iterations: usize,
    det: f64,
    cfg: &ShootingConfig,
) -> Result<(SpectralPoint, OracleReport)> {
    if det > cfg.tolerance {
        return Err(Error::NoConvergence {
            iterations,
            residual: det,
        });
    }
    let omega = zeta.exp();
    let z = -omega * omega;
    let point = SpectralPoint {
        z,
        j: ladder_index(nu, z),
        residual: det,
        source: Source::Oracle,
    };
    let report = OracleReport {
        guess,
        converged_z: z,
        iterations,
        determinant_residual: det,
    };
    Ok((point, report))
}

/// Shoots from every guess (in parallel under `policy`), keeping input order.
pub fn shoot_all(
    a: &ExtensionParams,
    nu: f64,
    guesses: &[C64],
    cfg: &ShootingConfig,
    policy: ExecPolicy,
) -> Result<Vec<(SpectralPoint, OracleReport)>> {
    policy.try_map(guesses, |&g| shoot_eigenvalue(a, nu, g, cfg))
}

/// Outcome of [`domain_membership`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    /// `true` when `u` vanishes on the boundary window (the `C = 0` case).
    pub zero_trace: bool,
    pub cross_ratio: f64,
    pub c_plus: C64,
    pub c_minus: C64,
    pub fit_residual: f64,
}

/// Cross-ratio threshold for [`domain_membership`].
pub const MEMBERSHIP_TOL: f64 = 1e-6;

/// Whether the boundary behaviour of `u` is `C r^{1/2}(a₁ r^{iν} + a₂ r^{-iν})`.
pub fn domain_membership(u: &RadialFunction, a: &ExtensionParams, nu: f64) -> Result<Membership> {
    let bc = extract_boundary_coefficients(u, nu)?;
    let r0 = u.points()[0];
    let trace = (bc.c_plus.norm() + bc.c_minus.norm()) * r0.sqrt();
    let zero_trace = trace <= 1e-12 * u.max_abs() || u.max_abs() == 0.0;
    let cross_ratio = domain_cross_ratio(a, bc.c_plus, bc.c_minus);
    Ok(Membership {
        member: zero_trace || cross_ratio < MEMBERSHIP_TOL,
        zero_trace,
        cross_ratio,
        c_plus: bc.c_plus,
        c_minus: bc.c_minus,
        fit_residual: bc.fit_residual,
    })
}

/// `χ(r) r^{1/2}(a₁ r^{iν} + a₂ r^{-iν})` with a smooth cutoff `χ` equal to 1
/// on `[0, cut]` and 0 beyond `2·cut`, sampled on `grid`.
pub fn boundary_profile(grid: Arc<RadialGrid>, a: &ExtensionParams, nu: f64, cut: f64) -> RadialFunction {
    let (a1, a2) = (a.a1(), a.a2());
    RadialFunction::from_fn(grid, move |r| {
        let chi = crate::extensions::weyl_cutoff(1.0 + r / cut);
        let ph = C64::new(0.0, nu * r.ln()).exp();
        (a1 * ph + a2 * ph.conj()) * (r.sqrt() * chi)
    })
}
