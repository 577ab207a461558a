//! Adaptive Dormand–Prince 5(4) integration of the radial equation
//! `u'' = (ω² + b/r²) u` in the logarithmic variable `t = ln r`, where
//! `y(t) = r^{-1/2} u(r)` satisfies `y'' = (ω² e^{2t} - ν²) y`.
//!
//! This path shares no code with the Bessel-function route and serves as the
//! independent verifier for it (shooting, oscillatory solutions).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// `(y, dy/dt)` at some `t`.
pub type State = [C64; 2];

/// Integrator settings.
#[derive(Debug, Clone, Copy)]
pub struct OdeConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig {
            rtol: 1e-12,
            atol: 1e-300,
            max_steps: 2_000_000,
        }
    }
}

// Dormand–Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn add(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += k[0] * (h * c);
        out[1] += k[1] * (h * c);
    }
    out
}

/// Integrates the linear system `y' = [y₁, q(t) y₀]` from `t0` through the
/// monotone list `targets`, returning the state at each target.
pub fn integrate<Q>(q: Q, t0: f64, y0: State, targets: &[f64], cfg: &OdeConfig) -> Result<Vec<State>>
where
    Q: Fn(f64) -> C64,
{
    let rhs = |t: f64, y: &State| -> State { [y[1], q(t) * y[0]] };
    let mut out = Vec::with_capacity(targets.len());
    if targets.is_empty() {
        return Ok(out);
    }
    let dir = if targets[0] >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let span = (targets[targets.len() - 1] - t0).abs().max(1e-12);
    let mut h = dir * (span * 1e-3).min(1e-2);
    let mut k1 = rhs(t, &y);
    let mut steps = 0usize;
    for &target in targets {
        while dir * (target - t) > 0.0 {
            if steps >= cfg.max_steps {
                return Err(Error::NoConvergence {
                    iterations: steps,
                    residual: (target - t).abs(),
                });
            }
            steps += 1;
            let mut hs = h;
            let last = dir * (t + hs - target) >= 0.0;
            if last {
                hs = target - t;
            }
            let k2 = rhs(t + C2 * hs, &add(&y, hs, &[(A21, &k1)]));
            let k3 = rhs(t + C3 * hs, &add(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(t + C4 * hs, &add(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = rhs(
                t + C5 * hs,
                &add(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = rhs(
                t + hs,
                &add(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = add(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = rhs(t + hs, &y_new);
            let mut err: f64 = 0.0;
            for c in 0..2 {
                let e = (k1[c] * E1 + k3[c] * E3 + k4[c] * E4 + k5[c] * E5 + k6[c] * E6 + k7[c] * E7) * hs;
                let scale = cfg.atol + cfg.rtol * y[c].norm().max(y_new[c].norm());
                err = err.max(e.norm() / scale);
            }
            if err <= 1.0 {
                t = if last { target } else { t + hs };
                y = y_new;
                k1 = k7;
            }
            let factor = if err == 0.0 {
                5.0
            } else if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                0.2
            };
            if !last || err > 1.0 {
                h = hs * factor;
            }
        }
        out.push(y);
    }
    Ok(out)
}

/// Large-r asymptotic data `(u, u')` for the solution behaving like
/// `e^{-ωr}` (pass `-ω` for the `e^{ωr}`-like one).
pub fn asymptotic_decaying(b: f64, omega: C64, r: f64) -> Result<[C64; 2]> {
    let mut c = C64::new(1.0, 0.0);
    let mut g = c;
    let mut dg = C64::new(0.0, 0.0);
    let mut last = f64::INFINITY;
    let mut converged = false;
    for k in 0..400 {
        let kf = k as f64;
        c = c * (b - kf * (kf + 1.0)) / (2.0 * omega * (kf + 1.0));
        let term = c * r.powi(-(k + 1));
        let tn = term.norm();
        if tn > last {
            break;
        }
        g += term;
        dg -= term * ((kf + 1.0) / r);
        last = tn;
        if tn < 1e-17 * g.norm() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::GridResolution(format!(
            "asymptotic series at |ω| r = {} does not reach double precision",
            omega.norm() * r
        )));
    }
    let e = (-omega * r).exp();
    Ok([e * g, e * (dg - omega * g)])
}

/// Converts `(u, u')` at `r` into `(y, dy/dt)`.
pub fn to_log_state(r: f64, u: [C64; 2]) -> State {
    let s = r.sqrt();
    [u[0] / s, (u[1] - u[0] / (2.0 * r)) * s]
}

/// Converts `(y, dy/dt)` at `r` back to `(u, u')`.
pub fn from_log_state(r: f64, y: State) -> [C64; 2] {
    let s = r.sqrt();
    [y[0] * s, (y[1] + y[0] * 0.5) / s]
}

/// Amplitudes `(c₊, c₋)` of `y = c₊ e^{iνt} + c₋ e^{-iνt}` matching a state
/// at small `t` (the exact general solution when `ω r → 0`).
pub fn boundary_amplitudes(nu: f64, t: f64, y: State) -> (C64, C64) {
    let inu = C64::new(0.0, nu);
    let ep = (inu * t).exp();
    let em = (-inu * t).exp();
    let cp = (y[0] + y[1] / inu) * 0.5 / ep;
    let cm = (y[0] - y[1] / inu) * 0.5 / em;
    (cp, cm)
}

/// Integrates the solution with `u ~ e^{-ωr}` (Re ω >= 0, ω != 0) inward
/// from `r_start` and returns `(u, u')` at each radius in `radii`
/// (decreasing order required).
pub fn decaying_solution_inward(
    nu: f64,
    omega: C64,
    r_start: f64,
    radii: &[f64],
    cfg: &OdeConfig,
) -> Result<Vec<[C64; 2]>> {
    let b = -0.25 - nu * nu;
    let init = to_log_state(r_start, asymptotic_decaying(b, omega, r_start)?);
    let w2 = omega * omega;
    let q = move |t: f64| w2 * (2.0 * t).exp() - nu * nu;
    let ts: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let states = integrate(q, r_start.ln(), init, &ts, cfg)?;
    Ok(radii.iter().zip(states).map(|(&r, y)| from_log_state(r, y)).collect())
}

/// Boundary amplitudes `(c₊, c₋)` (coefficients of `r^{1/2±iν}`) of the
/// solution with `u ~ e^{-ωr}` at infinity, by inward integration from
/// `r = 40/Re ω` (or `40/|ω|` on the imaginary axis) down to `|ω| r = r_end`.
pub fn decaying_boundary_amplitudes(nu: f64, omega: C64, r_end: f64, cfg: &OdeConfig) -> Result<(C64, C64)> {
    let re = omega.re.max(0.0);
    let r_start = if re > 1e-3 * omega.norm() {
        40.0 / re
    } else {
        40.0 / omega.norm()
    };
    let b = -0.25 - nu * nu;
    let init_u = asymptotic_decaying(b, omega, r_start)?;
    // normalize away the e^{-ωr} magnitude so the inward growth stays in range
    let norm = init_u[0].norm();
    let init = to_log_state(r_start, [init_u[0] / norm, init_u[1] / norm]);
    let w2 = omega * omega;
    let q = move |t: f64| w2 * (2.0 * t).exp() - nu * nu;
    let t_end = (r_end / omega.norm()).ln();
    let states = integrate(q, r_start.ln(), init, &[t_end], cfg)?;
    let (cp, cm) = boundary_amplitudes(nu, t_end, states[0]);
    Ok((cp * norm, cm * norm))
}
