//! The distinguished solutions of `ω² u - u'' + b u / r² = 0`.
//!
//! * `φ_{ω,0}(r) = w₀(ωr)` with `w₀(z) = √(2z/π) K_{iν}(z)`, so that
//!   `e^{ωr} φ_{ω,0}(r) → 1`;
//! * `φ_{ω,1}(r) = v(ωr)` with `v(z) = √(2z/π) (iπ / (2 sinh νπ)) (I_{iν} + I_{-iν})(z)`,
//!   which has the same `r^{1/2+iν}` amplitude as `φ_{ω,0}` and the opposite
//!   `r^{1/2-iν}` amplitude;
//! * the oscillatory pair `φ_{iμ,0}(r) = w₀(-iμr)`, `φ_{iμ,1}(r) = w₀(iμr)`.
//!
//! Near the origin `φ_{ω,0} ≈ ω^{1/2}(A ω^{iν} r^{1/2+iν} + Ā ω^{-iν} r^{1/2-iν})`
//! where `A` is [`AlphaCoefficient::boundary_amplitude`].

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::ode::{self, OdeConfig};
use crate::radial::{RadialFunction, RadialGrid};
use crate::special_functions::bessel::{i_pair_imag_scaled, k_imag_scaled};
use crate::special_functions::{alpha_coefficient, AlphaCoefficient};

/// Largest exponent we allow before reporting overflow instead of
/// returning infinities.
const MAX_EXPONENT: f64 = 700.0;

/// `ω = μ e^{iξ}` with `Re ω > 0`, or `ω = iμ` on the positive imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOmega {
    omega: C64,
    mu: f64,
    xi: f64,
}

impl SpectralOmega {
    pub fn new(omega: C64) -> Result<Self> {
        let mu = omega.norm();
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!("ω must be nonzero and finite, got {omega}")));
        }
        let oscillatory = omega.re == 0.0 && omega.im > 0.0;
        if !(omega.re > 0.0) && !oscillatory {
            return Err(Error::Domain(format!("need Re ω > 0 or ω = iμ, got {omega}")));
        }
        Ok(SpectralOmega {
            omega,
            mu,
            xi: omega.arg(),
        })
    }

    pub fn from_polar(mu: f64, xi: f64) -> Result<Self> {
        if (xi - PI / 2.0).abs() < 1e-15 {
            return Self::new(C64::new(0.0, mu));
        }
        Self::new(C64::from_polar(mu, xi))
    }

    /// `ω = √(-z)` on the principal branch; `z` must avoid `[0, ∞)`.
    pub fn from_z(z: C64) -> Result<Self> {
        if z.im == 0.0 && z.re >= 0.0 {
            return Err(Error::Domain(format!("z = {z} lies on the continuous spectrum [0, ∞)")));
        }
        Self::new((-z).sqrt())
    }

    pub fn omega(&self) -> C64 {
        self.omega
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// The spectral parameter `z = -ω²`.
    pub fn z(&self) -> C64 {
        -self.omega * self.omega
    }

    pub fn is_oscillatory(&self) -> bool {
        self.omega.re == 0.0
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Domain(format!("ν must be positive, got {nu}")));
    }
    Ok(())
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("r must be positive, got {r}")));
    }
    Ok(())
}

/// Exponentially rescaled values at one radius: `Q = e^{ωr} φ_{ω,0}`,
/// `P = e^{-ωr} φ_{ω,1}` and their r-derivatives carrying the same factors
/// (`dq = e^{ωr} φ'_{ω,0}`, `dp = e^{-ωr} φ'_{ω,1}`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPair {
    pub q: C64,
    pub dq: C64,
    pub p: C64,
    pub dp: C64,
}

/// Evaluator for `φ_{ω,0}`, `φ_{ω,1}` at a fixed `(ν, ω)`, `Re ω > 0`.
#[derive(Debug, Clone)]
pub struct SolutionPair {
    nu: f64,
    omega: SpectralOmega,
    alpha: AlphaCoefficient,
    growing_pref: C64,
}

impl SolutionPair {
    pub fn new(nu: f64, omega: SpectralOmega) -> Result<Self> {
        check_nu(nu)?;
        if !(omega.omega().re > 0.0) {
            return Err(Error::Domain(format!(
                "the decaying/growing pair needs Re ω > 0, got {}",
                omega.omega()
            )));
        }
        let alpha = alpha_coefficient(nu)?;
        let growing_pref = C64::new(0.0, PI / (2.0 * (nu * PI).sinh()));
        Ok(SolutionPair {
            nu,
            omega,
            alpha,
            growing_pref,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn omega(&self) -> SpectralOmega {
        self.omega
    }

    pub fn alpha(&self) -> &AlphaCoefficient {
        &self.alpha
    }

    /// Scaled values and derivatives at `r`.
    pub fn scaled_at(&self, r: f64) -> Result<ScaledPair> {
        check_r(r)?;
        let w = self.omega.omega();
        let z = w * r;
        let sz = z.sqrt();
        let c = (2.0 / PI).sqrt();
        let k = k_imag_scaled(self.nu, z)?;
        let (ip, im) = i_pair_imag_scaled(self.nu, z, k)?;
        // d/dz [√z F(z)] = F/(2√z) + √z F'
        let q = c * sz * k.value;
        let dq = w * c * (k.value / (2.0 * sz) + sz * k.deriv);
        let isum = ip.value + im.value;
        let dsum = ip.deriv + im.deriv;
        let p = c * self.growing_pref * sz * isum;
        let dp = w * c * self.growing_pref * (isum / (2.0 * sz) + sz * dsum);
        Ok(ScaledPair { q, dq, p, dp })
    }

    /// `(φ_{ω,0}(r), φ'_{ω,0}(r))`.
    pub fn decaying(&self, r: f64) -> Result<(C64, C64)> {
        let s = self.scaled_at(r)?;
        let e = (-self.omega.omega() * r).exp();
        Ok((s.q * e, s.dq * e))
    }

    /// `(φ_{ω,1}(r), φ'_{ω,1}(r))`; overflow is reported, not saturated.
    pub fn growing(&self, r: f64) -> Result<(C64, C64)> {
        check_r(r)?;
        let x = self.omega.omega().re * r;
        if x > MAX_EXPONENT {
            return Err(Error::Overflow(format!(
                "φ_(ω,1)(r) ~ e^(Re ω r) with Re ω r = {x} exceeds the double range"
            )));
        }
        let s = self.scaled_at(r)?;
        let e = (self.omega.omega() * r).exp();
        Ok((s.p * e, s.dp * e))
    }

    /// `W = φ_{ω,0} φ'_{ω,1} - φ'_{ω,0} φ_{ω,1}` evaluated at `r`.
    pub fn wronskian_at(&self, r: f64) -> Result<C64> {
        let s = self.scaled_at(r)?;
        Ok(s.q * s.dp - s.dq * s.p)
    }

    /// Closed form `4iνω |A|²`, `A` the boundary amplitude.
    pub fn wronskian_closed_form(&self) -> C64 {
        let a = self.alpha.boundary_amplitude().norm_sqr();
        C64::new(0.0, 4.0 * self.nu * a) * self.omega.omega()
    }

    /// Leading boundary amplitudes `(c₊, c₋)` of `φ_{ω,0}` (kind 0) or
    /// `φ_{ω,1}` (kind 1) in front of `r^{1/2±iν}`.
    pub fn boundary_model(&self, kind: u8) -> (C64, C64) {
        let w = self.omega.omega();
        let a = self.alpha.boundary_amplitude();
        let inu = C64::new(0.0, self.nu);
        let cp = (w.ln() * (inu + 0.5)).exp() * a;
        let cm = (w.ln() * (0.5 - inu)).exp() * a.conj();
        if kind == 0 {
            (cp, cm)
        } else {
            (cp, -cm)
        }
    }

    /// Samples `Q = e^{ωr} φ_{ω,0}` and `P = e^{-ωr} φ_{ω,1}` on a grid.
    pub fn sample_scaled(&self, grid: &RadialGrid, policy: ExecPolicy) -> Result<(Vec<C64>, Vec<C64>)> {
        let pairs = policy.try_map(grid.points(), |&r| self.scaled_at(r))?;
        Ok(pairs.into_iter().map(|s| (s.q, s.p)).unzip())
    }

    /// `φ_{ω,0}` sampled on a grid.
    pub fn decaying_on(&self, grid: Arc<RadialGrid>, policy: ExecPolicy) -> Result<RadialFunction> {
        let w = self.omega.omega();
        let vals = policy.try_map(grid.points(), |&r| {
            Ok::<_, Error>(self.scaled_at(r)?.q * (-w * r).exp())
        })?;
        RadialFunction::new(grid, vals)
    }

    /// `φ_{ω,1}` sampled on a grid.
    pub fn growing_on(&self, grid: Arc<RadialGrid>, policy: ExecPolicy) -> Result<RadialFunction> {
        let vals = policy.try_map(grid.points(), |&r| Ok::<_, Error>(self.growing(r)?.0))?;
        RadialFunction::new(grid, vals)
    }
}

/// `φ_{ω,0}(r)`, normalized by `e^{ωr} φ_{ω,0}(r) → 1`.
pub fn phi_decaying(nu: f64, omega: SpectralOmega, r: f64) -> Result<C64> {
    Ok(SolutionPair::new(nu, omega)?.decaying(r)?.0)
}

/// `φ_{ω,1}(r)`.
pub fn phi_growing(nu: f64, omega: SpectralOmega, r: f64) -> Result<C64> {
    Ok(SolutionPair::new(nu, omega)?.growing(r)?.0)
}

/// Which member of the oscillatory pair at `ω = iμ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OscillatoryKind {
    /// `φ_{iμ,0} ~ e^{iμr}`
    Outgoing,
    /// `φ_{iμ,1} ~ e^{-iμr}`
    Incoming,
}

impl OscillatoryKind {
    pub fn from_index(kind: u8) -> Result<Self> {
        match kind {
            0 => Ok(OscillatoryKind::Outgoing),
            1 => Ok(OscillatoryKind::Incoming),
            k => Err(Error::Invalid(format!("oscillatory kind must be 0 or 1, got {k}"))),
        }
    }

    fn sign(self) -> f64 {
        match self {
            OscillatoryKind::Outgoing => -1.0,
            OscillatoryKind::Incoming => 1.0,
        }
    }
}

/// `(φ_{iμ,kind}(r), φ'_{iμ,kind}(r))` through the boundary values of the
/// Bessel representation on `arg z = ∓π/2`.
pub fn phi_oscillatory_with_derivative(nu: f64, mu: f64, kind: OscillatoryKind, r: f64) -> Result<(C64, C64)> {
    check_nu(nu)?;
    check_r(r)?;
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Domain(format!("μ must be positive, got {mu}")));
    }
    let w = C64::new(0.0, kind.sign() * mu);
    let z = w * r;
    let sz = z.sqrt();
    let c = (2.0 / PI).sqrt();
    let k = k_imag_scaled(nu, z)?;
    let e = (-z).exp();
    let val = c * sz * k.value * e;
    let der = w * c * (k.value / (2.0 * sz) + sz * k.deriv) * e;
    Ok((val, der))
}

/// `φ_{iμ,kind}(r)` with `e^{∓iμr} φ_{iμ,kind}(r) → 1`.
pub fn phi_oscillatory(nu: f64, mu: f64, kind: OscillatoryKind, r: f64) -> Result<C64> {
    Ok(phi_oscillatory_with_derivative(nu, mu, kind, r)?.0)
}

/// The oscillatory solutions by inward ODE integration from `r = 40/μ`
/// (or from the largest requested radius, if that is further out) with
/// asymptotic initial data. `radii` may be in any order.
pub fn phi_oscillatory_ode(nu: f64, mu: f64, kind: OscillatoryKind, radii: &[f64]) -> Result<Vec<(C64, C64)>> {
    check_nu(nu)?;
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("μ must be positive, got {mu}")));
    }
    for &r in radii {
        check_r(r)?;
    }
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[b].partial_cmp(&radii[a]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| radii[i]).collect();
    let r_start = (40.0 / mu).max(sorted.first().copied().unwrap_or(0.0) * 1.5);
    let w = C64::new(0.0, kind.sign() * mu);
    let states = ode::decaying_solution_inward(nu, w, r_start, &sorted, &OdeConfig::default())?;
    let mut out = vec![(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); radii.len()];
    for (slot, s) in order.iter().zip(states) {
        out[*slot] = (s[0], s[1]);
    }
    Ok(out)
}

/// Radii (in units of `1/|ω|`) at which [`wronskian`] samples the Wronskian.
pub const WRONSKIAN_SAMPLE_RADII: [f64; 4] = [0.5, 1.0, 2.0, 5.0];

/// `W(ω)` averaged over [`WRONSKIAN_SAMPLE_RADII`]` / |ω|`, with the relative
/// spread of the samples.
pub fn wronskian_with_spread(nu: f64, omega: SpectralOmega) -> Result<(C64, f64)> {
    let pair = SolutionPair::new(nu, omega)?;
    let samples: Vec<C64> = WRONSKIAN_SAMPLE_RADII
        .iter()
        .map(|&s| pair.wronskian_at(s / omega.mu()))
        .collect::<Result<_>>()?;
    let mean = samples.iter().sum::<C64>() / samples.len() as f64;
    let spread = samples.iter().map(|w| (w - mean).norm()).fold(0.0, f64::max) / mean.norm();
    Ok((mean, spread))
}

/// `W(ω) = φ_{ω,0} φ'_{ω,1} - φ'_{ω,0} φ_{ω,1}`.
pub fn wronskian(nu: f64, omega: SpectralOmega) -> Result<C64> {
    Ok(wronskian_with_spread(nu, omega)?.0)
}

/// Least-squares boundary amplitudes of a sampled function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCoefficients {
    /// Coefficient of `r^{1/2+iν}`.
    pub c_plus: C64,
    /// Coefficient of `r^{1/2-iν}`.
    pub c_minus: C64,
    /// RMS misfit of `r^{-1/2} u` against the two-term model on the window.
    pub fit_residual: f64,
    /// Number of samples in the window.
    pub points: usize,
    /// Condition number of the least-squares design matrix.
    pub condition: f64,
}

/// Default width of the fitting window `[r_min, WINDOW r_min]`.
pub const BOUNDARY_WINDOW: f64 = 10.0;

/// Fits `r^{-1/2} u(r) ≈ c₊ r^{iν} + c₋ r^{-iν}` on `[r₀, 10 r₀]`, `r₀` the
/// first grid point.
pub fn extract_boundary_coefficients(u: &RadialFunction, nu: f64) -> Result<BoundaryCoefficients> {
    extract_boundary_coefficients_window(u, nu, BOUNDARY_WINDOW)
}

pub fn extract_boundary_coefficients_window(u: &RadialFunction, nu: f64, window: f64) -> Result<BoundaryCoefficients> {
    check_nu(nu)?;
    let r = u.points();
    let r0 = r[0];
    let idx: Vec<usize> = (0..r.len())
        .take_while(|&i| r[i] <= window * r0 * (1.0 + 1e-12))
        .collect();
    if idx.len() < 4 {
        return Err(Error::IllConditioned(format!(
            "boundary window [{r0:e}, {:e}] holds only {} samples (need 4)",
            window * r0,
            idx.len()
        )));
    }
    // normal equations of the 2-column complex least-squares problem
    let (mut g11, mut g22, mut g12) = (0.0, 0.0, C64::new(0.0, 0.0));
    let (mut b1, mut b2) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    let mut rows = Vec::with_capacity(idx.len());
    for &i in &idx {
        let lr = r[i].ln();
        let e1 = C64::new(0.0, nu * lr).exp();
        let e2 = e1.conj();
        let y = u.values()[i] / r[i].sqrt();
        g11 += 1.0;
        g22 += 1.0;
        g12 += e1.conj() * e2;
        b1 += e1.conj() * y;
        b2 += e2.conj() * y;
        rows.push((e1, e2, y));
    }
    // eigenvalues of the Hermitian Gram matrix [[g11, g12], [conj g12, g22]]
    let tr = g11 + g22;
    let det = g11 * g22 - g12.norm_sqr();
    let disc = ((g11 - g22).powi(2) + 4.0 * g12.norm_sqr()).sqrt();
    let lmax = 0.5 * (tr + disc);
    let lmin = (0.5 * (tr - disc)).max(det / lmax);
    let condition = if lmin > 0.0 {
        (lmax / lmin).sqrt()
    } else {
        f64::INFINITY
    };
    if !(condition <= 1e8) {
        return Err(Error::IllConditioned(format!(
            "design matrix condition number {condition:e} exceeds 1e8"
        )));
    }
    let c_plus = (b1 * g22 - g12 * b2) / det;
    let c_minus = (b2 * g11 - g12.conj() * b1) / det;
    let ss: f64 = rows
        .iter()
        .map(|(e1, e2, y)| (y - c_plus * e1 - c_minus * e2).norm_sqr())
        .sum();
    Ok(BoundaryCoefficients {
        c_plus,
        c_minus,
        fit_residual: (ss / rows.len() as f64).sqrt(),
        points: rows.len(),
        condition,
    })
}
