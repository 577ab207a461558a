//! The one-parameter family `L_A`, `A = (a₁, a₂) ∈ ℂP¹`, of extensions of
//! the minimal operator: domain condition `r^{-1/2} u(r) ≈ C (a₁ r^{iν} + a₂ r^{-iν})`
//! at the origin, classification, spectrum, adjoint and scaling group.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::{RadialFunction, RadialGrid};
use crate::solutions::{phi_oscillatory, OscillatoryKind};
use crate::special_functions::alpha_coefficient;

/// Relative tolerance for projective comparisons and `|a₁| = |a₂|`.
pub const PROJECTIVE_TOL: f64 = 1e-12;
/// Residual bound for closed-form eigenvalues.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-10;
/// Slack on `|θ|` when deciding band membership, absorbing rounding in
/// inputs built as `e^{±νπ/2}` or `e^{±νπ}`.
const BAND_SLACK: f64 = 1e-12;

/// A projective pair `(a₁, a₂) ≠ (0, 0)`, stored with the larger-modulus
/// entry scaled to exactly 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExtensionParams {
    a1: C64,
    a2: C64,
}

impl ExtensionParams {
    pub fn new(a1: C64, a2: C64) -> Result<Self> {
        let finite = |c: C64| c.re.is_finite() && c.im.is_finite();
        if !finite(a1) || !finite(a2) {
            return Err(Error::Invalid("extension parameters must be finite".into()));
        }
        if a1.norm() == 0.0 && a2.norm() == 0.0 {
            return Err(Error::Invalid("A = (0, 0) is not a point of CP¹".into()));
        }
        let (n1, n2) = if a1.norm() >= a2.norm() {
            (C64::new(1.0, 0.0), a2 / a1)
        } else {
            (a1 / a2, C64::new(1.0, 0.0))
        };
        Ok(ExtensionParams { a1: n1, a2: n2 })
    }

    pub fn real(a1: f64, a2: f64) -> Result<Self> {
        Self::new(C64::new(a1, 0.0), C64::new(a2, 0.0))
    }

    pub fn a1(&self) -> C64 {
        self.a1
    }

    pub fn a2(&self) -> C64 {
        self.a2
    }

    /// `B = (ā₂, ā₁)`, the parameter of the adjoint operator.
    pub fn adjoint(&self) -> Self {
        Self::new(self.a2.conj(), self.a1.conj()).expect("adjoint of a valid pair is valid")
    }

    /// `|a₁| = |a₂|` to relative [`PROJECTIVE_TOL`].
    pub fn is_selfadjoint(&self) -> bool {
        let (m1, m2) = (self.a1.norm(), self.a2.norm());
        (m1 - m2).abs() <= PROJECTIVE_TOL * m1.max(m2)
    }

    /// Projective equality: `a₁ b₂ = a₂ b₁` to relative `tol`.
    pub fn projectively_equal(&self, other: &Self, tol: f64) -> bool {
        let cross = self.a1 * other.a2 - self.a2 * other.a1;
        cross.norm() <= tol * self.a1.norm().max(self.a2.norm()) * other.a1.norm().max(other.a2.norm())
    }

    /// `|κ| = |a₂| / |a₁|` (∞ when `a₁ = 0`).
    pub fn kappa_mod(&self) -> f64 {
        if self.a1.norm() == 0.0 {
            f64::INFINITY
        } else {
            self.a2.norm() / self.a1.norm()
        }
    }
}

impl PartialEq for ExtensionParams {
    fn eq(&self, other: &Self) -> bool {
        self.projectively_equal(other, PROJECTIVE_TOL)
    }
}

impl fmt::Display for ExtensionParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a1, self.a2)
    }
}

/// The four regimes of `|κ|` relative to the bands `e^{±νπ/2}`, `e^{±νπ}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    I,
    II,
    III,
    IV,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseLabel::I => "I",
            CaseLabel::II => "II",
            CaseLabel::III => "III",
            CaseLabel::IV => "IV",
        };
        f.write_str(s)
    }
}

/// Result of [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionInvariants {
    pub kappa_mod: f64,
    pub theta: f64,
    pub case_label: CaseLabel,
    /// Maximal angle of analyticity of the semigroup, when `-L_A` generates one.
    pub theta_a: Option<f64>,
}

impl ExtensionInvariants {
    pub fn is_generator(&self) -> bool {
        self.theta_a.is_some()
    }
}

/// `|κ|`, `θ = ln|κ|/ν`, case label and `θ_A`.
pub fn classify(a: &ExtensionParams, nu: f64) -> ExtensionInvariants {
    let kappa_mod = a.kappa_mod();
    let theta = if kappa_mod == 0.0 {
        f64::NEG_INFINITY
    } else {
        kappa_mod.ln() / nu
    };
    let t = theta.abs();
    let case_label = if a.is_selfadjoint() {
        CaseLabel::I
    } else if t <= PI / 2.0 + BAND_SLACK {
        CaseLabel::II
    } else if t < PI - BAND_SLACK {
        CaseLabel::III
    } else {
        CaseLabel::IV
    };
    let theta_a = match case_label {
        CaseLabel::I | CaseLabel::II => None,
        CaseLabel::III => Some(t - PI / 2.0),
        CaseLabel::IV => Some(PI / 2.0),
    };
    ExtensionInvariants {
        kappa_mod,
        theta,
        case_label,
        theta_a,
    }
}

/// Where an eigenvalue came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ClosedForm,
    Oracle,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::ClosedForm => "closed_form",
            Source::Oracle => "oracle",
        })
    }
}

/// An eigenvalue `z_j = -μ_j² e^{2iξ}` of `L_A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub z: C64,
    pub j: i64,
    pub residual: f64,
    pub source: Source,
}

/// Normalized residual of `a₁ ᾱ = a₂ α ω^{2iν}` at `ω`.
pub fn eigen_residual(a: &ExtensionParams, nu: f64, omega: C64) -> Result<f64> {
    let alpha = alpha_coefficient(nu)?.value;
    let lhs = a.a1() * alpha.conj();
    let rhs = a.a2() * alpha * (C64::new(0.0, 2.0 * nu) * omega.ln()).exp();
    let scale = lhs.norm().max(rhs.norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs - rhs).norm() / scale)
}

/// The ladder geometry of the eigenvalues: `ξ` and `ln μ` of the `j = 0`
/// member, or `None` when there are no eigenvalues.
fn ladder(a: &ExtensionParams, nu: f64) -> Result<Option<(f64, f64)>> {
    if a.a1().norm() == 0.0 || a.a2().norm() == 0.0 {
        return Ok(None);
    }
    let theta = a.kappa_mod().ln() / nu;
    if theta.abs() >= PI - BAND_SLACK {
        return Ok(None);
    }
    let eta = alpha_coefficient(nu)?.eta;
    // modulus:  |a₁| = |a₂| e^{-2νξ};   phase: arg a₁ - arg a₂ - 2η = 2ν ln μ (mod 2π)
    let xi = theta / 2.0;
    let phase = a.a1().arg() - a.a2().arg() - 2.0 * eta;
    // ln |z_j| = 2 ln μ = (phase + 2π m)/ν; pick m so that j = 0 is closest to |z| = 1
    let m0 = (-phase / (2.0 * PI)).round();
    let ln_mu0 = (phase + 2.0 * PI * m0) / (2.0 * nu);
    Ok(Some((xi, ln_mu0)))
}

/// Eigenvalues `z_j`, `j ∈ j_range`, solving the boundary condition in closed
/// form. Empty when `|κ| ∉ (e^{-νπ}, e^{νπ})`.
pub fn eigenvalues(a: &ExtensionParams, nu: f64, j_range: std::ops::RangeInclusive<i64>) -> Result<Vec<SpectralPoint>> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("ν must be positive, got {nu}")));
    }
    let Some((xi, ln_mu0)) = ladder(a, nu)? else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for j in j_range {
        let ln_mu = ln_mu0 + PI * j as f64 / nu;
        let omega = C64::from_polar(ln_mu.exp(), xi);
        let residual = eigen_residual(a, nu, omega)?;
        if !(residual < EIGEN_RESIDUAL_TOL) {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual,
            });
        }
        out.push(SpectralPoint {
            z: -omega * omega,
            j,
            residual,
            source: Source::ClosedForm,
        });
    }
    Ok(out)
}

/// `σ(L_A) = [0, ∞) ∪ {z_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Always `[0, ∞)`; kept explicit for exports.
    pub continuous: (f64, f64),
    pub eigenvalues: Vec<SpectralPoint>,
}

pub fn spectrum(a: &ExtensionParams, nu: f64, j_range: std::ops::RangeInclusive<i64>) -> Result<Spectrum> {
    Ok(Spectrum {
        continuous: (0.0, f64::INFINITY),
        eigenvalues: eigenvalues(a, nu, j_range)?,
    })
}

/// Angle `θ̂` of the eigenvalue ray `{-ρ e^{iθ̂}}`, when eigenvalues exist.
pub fn eigenvalue_ray_angle(a: &ExtensionParams, nu: f64) -> Result<Option<f64>> {
    Ok(ladder(a, nu)?.map(|(xi, _)| 2.0 * xi))
}

/// Whether `s` belongs to `G(ν) = {e^{mπ/ν} : m ∈ ℤ}` (tolerance 1e-12 on
/// `ν ln s / π`).
pub fn scaling_group_member(nu: f64, s: f64) -> bool {
    if !(s > 0.0) {
        return false;
    }
    let m = nu * s.ln() / PI;
    (m - m.round()).abs() <= 1e-12
}

/// The element of `G(ν)` closest to `s` in log scale.
pub fn nearest_member(nu: f64, s: f64) -> f64 {
    let m = (nu * s.ln() / PI).round();
    (m * PI / nu).exp()
}

fn smooth_step(x: f64) -> f64 {
    // C^∞ transition from 0 (x <= 0) to 1 (x >= 1)
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    a / (a + b)
}

/// Smooth cutoff equal to 1 on `[1, 2]` and vanishing outside `[1/2, 3]`.
pub fn weyl_cutoff(x: f64) -> f64 {
    if x < 1.0 {
        smooth_step(2.0 * (x - 0.5))
    } else if x <= 2.0 {
        1.0
    } else {
        smooth_step(3.0 - x)
    }
}

/// Output of [`weyl_witness`].
#[derive(Debug, Clone)]
pub struct WeylWitness {
    pub psi: RadialFunction,
    pub defect: f64,
    pub norm: f64,
}

/// Grid step used by [`weyl_witness`] in units of `1/μ`.
pub const WEYL_STEP: f64 = 0.02;

/// `ψ_n = χ(r/n) φ_{iμ,0}` and `‖(-μ² + L) ψ_n‖ / ‖ψ_n‖` (second derivative
/// by five-point differences on a uniform grid).
pub fn weyl_witness(nu: f64, mu: f64, n: usize) -> Result<WeylWitness> {
    weyl_witness_with_step(nu, mu, n, WEYL_STEP / mu)
}

pub fn weyl_witness_with_step(nu: f64, mu: f64, n: usize, step: f64) -> Result<WeylWitness> {
    if !(mu > 0.0) || !(nu > 0.0) {
        return Err(Error::Domain("ν and μ must be positive".into()));
    }
    if n < 2 {
        return Err(Error::Invalid(format!("witness index n must be >= 2, got {n}")));
    }
    if mu * step > 0.5 {
        return Err(Error::GridResolution(format!(
            "step {step} cannot resolve oscillation of wavenumber {mu} (μ·Δr = {} > 0.5)",
            mu * step
        )));
    }
    let nf = n as f64;
    let (lo, hi) = (0.5 * nf, 3.0 * nf);
    let count = ((hi - lo) / step).ceil() as usize + 1;
    let grid = Arc::new(RadialGrid::linear(lo, hi, count)?);
    let b = -0.25 - nu * nu;
    let vals = grid
        .points()
        .iter()
        .map(|&r| {
            let c = weyl_cutoff(r / nf);
            if c == 0.0 {
                Ok(C64::new(0.0, 0.0))
            } else {
                Ok(phi_oscillatory(nu, mu, OscillatoryKind::Outgoing, r)? * c)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let psi = RadialFunction::new(grid.clone(), vals)?;
    let d2 = psi.second_derivative();
    let r = grid.points();
    let defect_vals: Vec<C64> = (0..r.len())
        .map(|i| match d2[i] {
            Some(upp) => -psi.values()[i] * (mu * mu) - upp + psi.values()[i] * (b / (r[i] * r[i])),
            None => C64::new(0.0, 0.0),
        })
        .collect();
    let defect_fn = RadialFunction::new(grid, defect_vals)?;
    let norm = psi.norm();
    Ok(WeylWitness {
        defect: defect_fn.norm() / norm,
        psi,
        norm,
    })
}
