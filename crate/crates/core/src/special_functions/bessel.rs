//! Modified Bessel functions for the orders needed here: purely imaginary
//! orders `±iν` (the strongly singular regime) and real orders `σ >= 0`
//! (the Friedrichs blocks of the radial reduction).
//!
//! `K` is evaluated by the ascending series of `I_{±μ}` for |z| <= 2, by
//! Steed's continued fraction (CF2) in the middle range and by the Hankel
//! asymptotic expansion once its terms drop below machine precision before
//! they start to grow. `I` is evaluated by its ascending series near the
//! origin and, further out, from the CF1 ratio `I'/I` together with the
//! Wronskian `K I' - K' I = 1/z`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::gamma::recip_gamma;
use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const SERIES_RADIUS: f64 = 2.0;
/// Beyond this modulus the ascending series of `I` loses too many digits to
/// cancellation (and eventually overflows).
pub const I_SERIES_MAX_MODULUS: f64 = 40.0;
const MAX_CF_ITER: usize = 200_000;
const CF_TOL: f64 = 1e-15;

/// A function value together with its z-derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueDeriv {
    pub value: C64,
    pub deriv: C64,
}

fn check_right_half_plane(z: C64) -> Result<()> {
    if !(z.re > 0.0) || !z.im.is_finite() {
        return Err(Error::Domain(format!("Re z must be positive, got z = {z}")));
    }
    Ok(())
}

/// Ascending series for `I_μ(z)` and `I'_μ(z)` (any complex order with
/// `μ + 1` off the poles of Γ, principal branch of `(z/2)^μ`).
pub(crate) fn i_series(order: C64, z: C64) -> ValueDeriv {
    let half = z * 0.5;
    let quarter_sq = half * half;
    let mut term = (order * half.ln()).exp() * recip_gamma(order + 1.0);
    let mut sum = term;
    let mut dsum = term * order;
    let mut k = 0.0_f64;
    loop {
        k += 1.0;
        term = term * quarter_sq / (k * (order + k));
        sum += term;
        dsum += term * (order + 2.0 * k);
        if term.norm() <= EPS * sum.norm() && k * k > quarter_sq.norm() {
            break;
        }
        if k > 10_000.0 {
            break;
        }
    }
    ValueDeriv {
        value: sum,
        deriv: dsum / z,
    }
}

/// Steed's CF2. Returns the ratio `K_{μ+1}(z)/K_μ(z)` and, when Temme's
/// normalization sum converges as well, `e^z K_μ(z)`. Intended for |z| >= 2.
///
/// Close to the imaginary axis the normalization sum can overflow before it
/// converges while the ratio itself is still fine; callers then normalize
/// through the Wronskian instead.
fn steed_cf2(order: C64, z: C64) -> Result<(C64, Option<C64>)> {
    let one = C64::new(1.0, 0.0);
    let mut b = (z + 1.0) * 2.0;
    let mut d = one / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = C64::new(0.0, 0.0);
    let mut q2 = one;
    let a1 = C64::new(0.25, 0.0) - order * order;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = one + q * delh;
    let mut s_alive = true;
    let mut s_done = false;
    let mut h_done = false;
    for i in 1..MAX_CF_ITER {
        let fi = i as f64;
        a -= 2.0 * fi;
        b += 2.0;
        d = one / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        if s_alive && !s_done {
            c = -a * c / (fi + 1.0);
            let qnew = (q1 - b * q2 + q2 * 2.0) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            let dels = q * delh;
            s += dels;
            if !(s.norm().is_finite() && c.norm().is_finite() && q.norm().is_finite()) {
                s_alive = false;
            } else if dels.norm() < CF_TOL * s.norm() {
                s_done = true;
            }
        }
        if delh.norm() < CF_TOL * h.norm() {
            h_done = true;
        }
        if h_done && (s_done || !s_alive) {
            break;
        }
    }
    if !h_done {
        return Err(Error::NoConvergence {
            iterations: MAX_CF_ITER,
            residual: delh.norm() / h.norm(),
        });
    }
    h *= a1;
    let ratio = (order + z + 0.5 - h) / z;
    let k_mu = if s_done {
        Some((PI / (2.0 * z)).sqrt() / s)
    } else {
        None
    };
    Ok((ratio, k_mu))
}

/// Steed's CF2 with the Temme normalization: `e^z (K_μ(z), K_{μ+1}(z))`.
#[cfg(test)]
fn k_steed(order: C64, z: C64) -> Result<(C64, C64)> {
    match steed_cf2(order, z)? {
        (ratio, Some(k)) => Ok((k, k * ratio)),
        (_, None) => Err(Error::NoConvergence {
            iterations: MAX_CF_ITER,
            residual: f64::INFINITY,
        }),
    }
}

/// Hankel expansion of `e^z K_μ(z)`; `None` if the terms start to grow before
/// reaching machine precision.
fn k_asymptotic(order: C64, z: C64) -> Option<C64> {
    let four_mu2 = order * order * 4.0;
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term = term * (four_mu2 - odd * odd) / (8.0 * k as f64 * z);
        let t = term.norm();
        if t > last {
            return None;
        }
        sum += term;
        if t < 0.5 * EPS * sum.norm() {
            return Some((PI / (2.0 * z)).sqrt() * sum);
        }
        last = t;
    }
    None
}

/// `e^z (K_μ(z), K_{μ+1}(z))` for |z| > 2 by the asymptotic expansion when it
/// reaches full precision, Steed's CF2 otherwise.
fn k_pair_far(order: C64, z: C64) -> Result<(C64, C64)> {
    if let (Some(k0), Some(k1)) = (k_asymptotic(order, z), k_asymptotic(order + 1.0, z)) {
        return Ok((k0, k1));
    }
    let (ratio, k) = steed_cf2(order, z)?;
    if let Some(k) = k {
        return Ok((k, k * ratio));
    }
    if z.norm() > I_SERIES_MAX_MODULUS {
        return Err(Error::NoConvergence {
            iterations: MAX_CF_ITER,
            residual: f64::INFINITY,
        });
    }
    // K (I' - (K'/K) I) = 1/z with I from its ascending series
    let i = scale_down(i_series(order, z), z);
    let log_deriv = order / z - ratio;
    let k = 1.0 / (z * (i.deriv - log_deriv * i.value));
    Ok((k, k * ratio))
}

fn check_closed_half_plane(z: C64) -> Result<()> {
    if !(z.re >= 0.0) || !z.im.is_finite() || z.norm() == 0.0 {
        return Err(Error::Domain(format!("need Re z >= 0 and z != 0, got z = {z}")));
    }
    Ok(())
}

/// `e^z K_{iν}(z)` and `e^z K'_{iν}(z)` for Re z >= 0, z != 0, ν > 0.
pub(crate) fn k_imag_scaled(nu: f64, z: C64) -> Result<ValueDeriv> {
    check_closed_half_plane(z)?;
    let mu = C64::new(0.0, nu);
    if z.norm() <= SERIES_RADIUS {
        let ip = i_series(mu, z);
        let im = i_series(-mu, z);
        // π / (2 sin(iνπ)) = π / (2 i sinh νπ)
        let pref = PI / (C64::new(0.0, 2.0) * (nu * PI).sinh()) * z.exp();
        return Ok(ValueDeriv {
            value: pref * (im.value - ip.value),
            deriv: pref * (im.deriv - ip.deriv),
        });
    }
    let (k0, k1) = k_pair_far(mu, z)?;
    Ok(ValueDeriv {
        value: k0,
        deriv: mu / z * k0 - k1,
    })
}

/// CF1: the ratio `I'_μ(z) / I_μ(z)` by modified Lentz.
fn i_log_derivative(order: C64, z: C64) -> Result<C64> {
    let tiny = 1e-300;
    let bj = |j: f64| (order + j) * 2.0 / z;
    let mut f = bj(1.0);
    if f.norm() < tiny {
        f = C64::new(tiny, 0.0);
    }
    let mut c = f;
    let mut d = C64::new(0.0, 0.0);
    for j in 2..MAX_CF_ITER {
        let b = bj(j as f64);
        d = b + d;
        if d.norm() < tiny {
            d = C64::new(tiny, 0.0);
        }
        c = b + 1.0 / c;
        if c.norm() < tiny {
            c = C64::new(tiny, 0.0);
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < CF_TOL {
            return Ok(order / z + 1.0 / f);
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_CF_ITER,
        residual: f64::NAN,
    })
}

/// `e^{-z} I_μ(z)` from CF1 and the Wronskian with a known `e^z K_μ` (which
/// must equal `e^z K_{-μ}`, as it does for imaginary and real orders).
fn i_from_wronskian(order: C64, z: C64, k: ValueDeriv) -> Result<ValueDeriv> {
    let ratio = i_log_derivative(order, z)?;
    let value = 1.0 / (z * (ratio * k.value - k.deriv));
    Ok(ValueDeriv {
        value,
        deriv: ratio * value,
    })
}

fn scale_down(v: ValueDeriv, z: C64) -> ValueDeriv {
    let e = (-z).exp();
    ValueDeriv {
        value: v.value * e,
        deriv: v.deriv * e,
    }
}

/// `e^{-z} (I_{iν}(z), I_{-iν}(z))` with derivatives (also scaled by
/// `e^{-z}`), given `k = k_imag_scaled(nu, z)`.
pub(crate) fn i_pair_imag_scaled(nu: f64, z: C64, k: ValueDeriv) -> Result<(ValueDeriv, ValueDeriv)> {
    let mu = C64::new(0.0, nu);
    if z.norm() <= SERIES_RADIUS {
        return Ok((scale_down(i_series(mu, z), z), scale_down(i_series(-mu, z), z)));
    }
    Ok((i_from_wronskian(mu, z, k)?, i_from_wronskian(-mu, z, k)?))
}

/// `K_{iν}(z)` for ν > 0 and Re z > 0.
pub fn bessel_k_imag_order(nu: f64, z: C64) -> Result<C64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("order parameter ν must be positive, got {nu}")));
    }
    check_right_half_plane(z)?;
    Ok(k_imag_scaled(nu, z)?.value * (-z).exp())
}

/// Sign of the imaginary order in [`bessel_i_imag_order`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderSign {
    Plus,
    Minus,
}

/// `I_{±iν}(z)` by its ascending series.
pub fn bessel_i_imag_order(nu: f64, z: C64, sign: OrderSign) -> Result<C64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("order parameter ν must be positive, got {nu}")));
    }
    check_right_half_plane(z)?;
    if z.norm() > I_SERIES_MAX_MODULUS {
        return Err(Error::Overflow(format!(
            "|z| = {} exceeds the ascending-series range {}",
            z.norm(),
            I_SERIES_MAX_MODULUS
        )));
    }
    let mu = match sign {
        OrderSign::Plus => C64::new(0.0, nu),
        OrderSign::Minus => C64::new(0.0, -nu),
    };
    Ok(i_series(mu, z).value)
}

/// `e^z K_σ(z)` and derivative for real order σ >= 0 by the trapezoidal
/// rule applied to `∫_0^∞ exp(-z (cosh t - 1)) cosh(σt) dt`.
fn k_real_trapezoid_scaled(sigma: f64, z: C64) -> ValueDeriv {
    let arg = z.arg().abs();
    // half-width of the strip of analyticity in t
    let strip = (PI / 2.0 - arg).max(0.05);
    let h = (strip / 12.0).min(0.05);
    let re = z.re;
    let mut value = C64::new(0.0, 0.0);
    let mut deriv = C64::new(0.0, 0.0);
    let mut k = 0usize;
    loop {
        let t = k as f64 * h;
        let ch = t.cosh();
        let w = if k == 0 { 0.5 } else { 1.0 };
        let e = (-z * (ch - 1.0)).exp() * (sigma * t).cosh() * w;
        value += e;
        deriv -= e * ch;
        // truncate once e^{-Re z (cosh t - 1) + σt} < e^{-45}
        if re * (ch - 1.0) > 45.0 + sigma * t && k > 4 {
            break;
        }
        k += 1;
        if k > 400_000 {
            break;
        }
    }
    ValueDeriv {
        value: value * h,
        deriv: deriv * h,
    }
}

/// `e^z K_σ(z)` with derivative for real σ >= 0, Re z > 0.
pub fn k_real_scaled(sigma: f64, z: C64) -> Result<ValueDeriv> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!(
            "real order must be finite and >= 0, got {sigma}"
        )));
    }
    check_right_half_plane(z)?;
    if z.norm() <= SERIES_RADIUS {
        return Ok(k_real_trapezoid_scaled(sigma, z));
    }
    let order = C64::new(sigma, 0.0);
    let (k0, k1) = k_pair_far(order, z)?;
    Ok(ValueDeriv {
        value: k0,
        deriv: order / z * k0 - k1,
    })
}

/// `e^{-z} I_σ(z)` with derivative for real σ >= 0, given `k = k_real_scaled(σ, z)`.
pub fn i_real_scaled(sigma: f64, z: C64, k: ValueDeriv) -> Result<ValueDeriv> {
    check_right_half_plane(z)?;
    let order = C64::new(sigma, 0.0);
    if z.norm() <= SERIES_RADIUS {
        return Ok(scale_down(i_series(order, z), z));
    }
    i_from_wronskian(order, z, k)
}
