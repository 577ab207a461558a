//! The coupling `b < -1/4`, its index `ν`, and the boundary coefficient
//! `α(ν) = 2^{-iν} i / Γ(1+iν)`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::gamma::complex_gamma;
use crate::error::{Error, Result};

/// Coupling constant `b < -1/4` together with `ν = sqrt(-1/4 - b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingNu {
    b: f64,
    nu: f64,
}

impl CouplingNu {
    pub fn from_b(b: f64) -> Result<Self> {
        if !(b < -0.25) || !b.is_finite() {
            return Err(Error::Invalid(format!("coupling b must satisfy b < -1/4, got {b}")));
        }
        Ok(CouplingNu {
            b,
            nu: (-0.25 - b).sqrt(),
        })
    }

    pub fn from_nu(nu: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Invalid(format!("ν must be positive, got {nu}")));
        }
        Ok(CouplingNu { b: -0.25 - nu * nu, nu })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

/// `α(ν)` with the normalization constant set to one.
///
/// The decaying solution `√(2z/π) K_{iν}(z)` actually carries the amplitude
/// `scale · α` in front of `z^{1/2+iν}`, where `scale = √(π/2)/sinh(νπ)`;
/// see [`AlphaCoefficient::boundary_amplitude`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaCoefficient {
    pub value: C64,
    pub eta: f64,
    pub modulus: f64,
    nu: f64,
}

impl AlphaCoefficient {
    /// Positive real factor relating [`Self::value`] to the amplitude of the
    /// Bessel-normalized solution.
    pub fn scale(&self) -> f64 {
        (PI / 2.0).sqrt() / (self.nu * PI).sinh()
    }

    /// Amplitude of `z^{1/2+iν}` in the small-z expansion of `√(2z/π) K_{iν}(z)`.
    pub fn boundary_amplitude(&self) -> C64 {
        self.value * self.scale()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

/// `α(ν) = 2^{-iν} i / Γ(1+iν)` and its principal argument.
pub fn alpha_coefficient(nu: f64) -> Result<AlphaCoefficient> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Domain(format!("ν must be positive, got {nu}")));
    }
    let g = complex_gamma(C64::new(1.0, nu))?;
    let two_pow = C64::new(0.0, -nu * std::f64::consts::LN_2).exp();
    let value = two_pow * C64::i() / g;
    let modulus = value.norm();
    if !(modulus > 0.0) {
        return Err(Error::Overflow(format!("|α(ν)| underflows at ν = {nu}")));
    }
    Ok(AlphaCoefficient {
        value,
        eta: value.arg(),
        modulus,
        nu,
    })
}
