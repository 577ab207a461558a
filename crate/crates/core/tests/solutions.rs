use std::f64::consts::PI;
use std::sync::Arc;

use calogero::radial::{RadialFunction, RadialGrid};
use calogero::solutions::*;
use calogero::special_functions::alpha_coefficient;
use calogero::{ExecPolicy, C64};
use proptest::prelude::*;

fn omega(re: f64, im: f64) -> SpectralOmega {
    SpectralOmega::new(C64::new(re, im)).unwrap()
}

/// Five-point centered second difference with step `h`.
fn second_difference(f: &dyn Fn(f64) -> C64, r: f64, h: f64) -> C64 {
    (-f(r + 2.0 * h) + f(r + h) * 16.0 - f(r) * 30.0 + f(r - h) * 16.0 - f(r - 2.0 * h)) / (12.0 * h * h)
}

/// |ω² u - u'' + b u / r²| relative to the largest of the three terms.
fn residual(f: &dyn Fn(f64) -> C64, w2: C64, b: f64, r: f64) -> f64 {
    let h = 2e-3 * r.min(1.0);
    let u = f(r);
    let upp = second_difference(f, r, h);
    let terms = [w2 * u, upp, u * (b / (r * r))];
    let dominant = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    (terms[0] - terms[1] + terms[2]).norm() / dominant
}

#[test]
fn decaying_normalized_at_infinity() {
    let w = omega(1.0, 0.0);
    // e^{r} φ = 1 + (4(iν)² - 1)/(8r) + (4(iν)² - 1)(4(iν)² - 9)/(128 r²) + ...
    let v = phi_decaying(1.0, w, 20.0).unwrap() * 20f64.exp();
    assert!((v - (1.0 - 5.0 / 160.0 + 65.0 / 51200.0)).norm() < 1e-4);
    assert!(v.norm() <= 2.0);
    let v = phi_decaying(1.0, w, 600.0).unwrap() * 600f64.exp();
    assert!((v - 1.0).norm() < 1e-2);
    for r in [0.01, 0.3, 1.0, 7.0, 35.0] {
        let v = phi_decaying(1.0, w, r).unwrap();
        assert!(v.im.abs() <= 1e-13 * v.norm(), "r={r}");
    }
}

#[test]
fn decaying_boundary_asymptotics() {
    let nu = 1.0;
    let w = SpectralOmega::from_polar(2.0, PI / 6.0).unwrap();
    let r: f64 = 1e-5;
    let got = phi_decaying(nu, w, r).unwrap() / r.sqrt();
    let a = alpha_coefficient(nu).unwrap().boundary_amplitude();
    let (mu, xi) = (w.mu(), w.xi());
    let pow = |p: f64| C64::new(0.0, p).exp();
    let model = mu.sqrt()
        * C64::new(0.0, xi / 2.0).exp()
        * (a * pow(nu * mu.ln()) * (-xi * nu).exp() * pow(nu * r.ln())
            + a.conj() * pow(-nu * mu.ln()) * (xi * nu).exp() * pow(-nu * r.ln()));
    assert!((got - model).norm() < 1e-4 * model.norm(), "{got} vs {model}");
}

#[test]
fn growing_solution_properties() {
    let nu = 1.0;
    let w1 = omega(1.0, 0.0);
    for r in [0.1, 1.0, 5.0, 30.0] {
        let v = phi_growing(nu, w1, r).unwrap();
        assert!(v.re.abs() <= 1e-12 * v.norm(), "r={r}: {v}");
    }
    let ratios: Vec<f64> = (0..=20)
        .map(|k| {
            let r = 20.0 + k as f64;
            phi_growing(nu, w1, r).unwrap().norm() * (-r).exp()
        })
        .collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    // the limit is 1/sinh(νπ); the ratio stays within a narrow band
    assert!(lo > 0.0 && hi / lo < 1.1, "[{lo}, {hi}]");
    // I ~ e^x/√(2πx) (1 + (1 + 4ν²)/(8x) + ...)
    let limit = 1.0 / (nu * PI).sinh() * (1.0 + (1.0 + 4.0 * nu * nu) / 320.0);
    assert!((ratios[20] / limit - 1.0).abs() < 1e-3);
}

#[test]
fn growing_boundary_ratio() {
    let nu = 1.0;
    let w = omega(1.5, 0.0);
    let pair = SolutionPair::new(nu, w).unwrap();
    let grid = Arc::new(RadialGrid::log(1e-5 / 1.5, 1.0, 400).unwrap());
    let u = pair.growing_on(grid, ExecPolicy::Sequential).unwrap();
    let bc = extract_boundary_coefficients(&u, nu).unwrap();
    let a = alpha_coefficient(nu).unwrap().value;
    let (mu, xi) = (w.mu(), w.xi());
    let expected = -(a.conj() / a) * C64::new(0.0, -2.0 * nu * mu.ln()).exp() * (2.0 * xi * nu).exp();
    assert!(
        (bc.c_minus / bc.c_plus - expected).norm() < 1e-6,
        "{}",
        bc.c_minus / bc.c_plus
    );
}

#[test]
fn boundary_fit_matches_model_for_both_solutions() {
    for (nu, w) in [(1.0, omega(1.0, 0.5)), (0.5, omega(2.0, -1.0)), (2.0, omega(0.3, 0.2))] {
        let pair = SolutionPair::new(nu, w).unwrap();
        let grid = Arc::new(RadialGrid::log(1e-4 / w.mu() * 1e-1, 1.0 / w.mu(), 300).unwrap());
        for kind in [0u8, 1] {
            let u = if kind == 0 {
                pair.decaying_on(grid.clone(), ExecPolicy::Parallel).unwrap()
            } else {
                pair.growing_on(grid.clone(), ExecPolicy::Parallel).unwrap()
            };
            let bc = extract_boundary_coefficients(&u, nu).unwrap();
            let (cp, cm) = pair.boundary_model(kind);
            let scale = cp.norm().max(cm.norm());
            assert!((bc.c_plus - cp).norm() < 1e-6 * scale, "ν={nu} kind={kind}");
            assert!((bc.c_minus - cm).norm() < 1e-6 * scale, "ν={nu} kind={kind}");
        }
    }
}

#[test]
fn ode_residuals_small() {
    for (nu, w) in [(1.0, omega(1.0, 0.0)), (0.5, omega(1.0, 1.5)), (3.0, omega(2.0, -0.5))] {
        let b = -0.25 - nu * nu;
        let pair = SolutionPair::new(nu, w).unwrap();
        let w2 = w.omega() * w.omega();
        for r in [0.05, 0.4, 1.3, 3.0, 8.0] {
            let r = r / w.mu();
            let f0 = |x: f64| pair.decaying(x).unwrap().0;
            let f1 = |x: f64| pair.growing(x).unwrap().0;
            assert!(residual(&f0, w2, b, r) < 1e-7, "φ0 ν={nu} r={r}");
            assert!(residual(&f1, w2, b, r) < 1e-7, "φ1 ν={nu} r={r}");
        }
    }
}

#[test]
fn oscillatory_solutions() {
    let nu = 1.0;
    let mu = 1.0;
    let v = phi_oscillatory(nu, mu, OscillatoryKind::Outgoing, 100.0).unwrap();
    assert!((v * C64::new(0.0, -100.0).exp() - 1.0).norm() < 1e-2);
    let v1 = phi_oscillatory(nu, mu, OscillatoryKind::Incoming, 100.0).unwrap();
    assert!((v1 * C64::new(0.0, 100.0).exp() - 1.0).norm() < 1e-2);

    let radii: Vec<f64> = (0..50).map(|k| 1.0 + k as f64).collect();
    let ws: Vec<C64> = radii
        .iter()
        .map(|&r| {
            let (a, da) = phi_oscillatory_with_derivative(nu, mu, OscillatoryKind::Outgoing, r).unwrap();
            let (b, db) = phi_oscillatory_with_derivative(nu, mu, OscillatoryKind::Incoming, r).unwrap();
            a * db - da * b
        })
        .collect();
    for w in &ws {
        assert!((w - C64::new(0.0, -2.0 * mu)).norm() < 1e-9, "{w}");
    }

    let b = -0.25 - nu * nu;
    for kind in [OscillatoryKind::Outgoing, OscillatoryKind::Incoming] {
        let f = |x: f64| phi_oscillatory(nu, mu, kind, x).unwrap();
        for r in [0.2, 1.0, 4.0, 20.0] {
            assert!(residual(&f, C64::new(-mu * mu, 0.0), b, r) < 1e-7, "r={r}");
        }
    }
}

#[test]
fn oscillatory_bessel_route_matches_ode_route() {
    for (nu, mu) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.7)] {
        let radii = [0.05, 0.5, 2.0, 10.0, 30.0];
        for kind in [OscillatoryKind::Outgoing, OscillatoryKind::Incoming] {
            let ode = phi_oscillatory_ode(nu, mu, kind, &radii).unwrap();
            for (&r, (u, du)) in radii.iter().zip(ode) {
                let (v, dv) = phi_oscillatory_with_derivative(nu, mu, kind, r).unwrap();
                assert!(
                    (u - v).norm() < 1e-8 * v.norm().max(1.0),
                    "ν={nu} μ={mu} r={r}: {u} vs {v}"
                );
                assert!((du - dv).norm() < 1e-8 * dv.norm().max(1.0));
            }
        }
    }
}

#[test]
fn wronskian_invariants() {
    for (nu, w) in [
        (1.0, omega(1.0, 0.0)),
        (0.5, omega(2.0, 0.0)),
        (1.0, omega(1.0, 1.0)),
        (2.5, omega(0.4, -0.3)),
    ] {
        let (mean, spread) = wronskian_with_spread(nu, w).unwrap();
        assert!(spread < 1e-9, "spread {spread:e}");
        let pair = SolutionPair::new(nu, w).unwrap();
        let closed = pair.wronskian_closed_form();
        assert!((mean - closed).norm() < 1e-8 * closed.norm(), "{mean} vs {closed}");
        // closed form computed from the boundary model W(r^{1/2+iν}, r^{1/2-iν}) = -2iν
        let (cp, cm) = pair.boundary_model(0);
        let (gp, gm) = pair.boundary_model(1);
        let derived = (cp * gm - cm * gp) * C64::new(0.0, -2.0 * nu);
        assert!((derived - closed).norm() < 1e-12 * closed.norm());
        if w.omega().im == 0.0 {
            assert!(mean.re.abs() < 1e-10 * mean.norm());
        }
    }
}

#[test]
fn extraction_is_scale_consistent() {
    let nu = 1.2;
    let w = omega(1.0, 0.3);
    let pair = SolutionPair::new(nu, w).unwrap();
    let grid = Arc::new(RadialGrid::log(1e-7, 1e-3, 120).unwrap());
    let s = 3.7;
    let u = RadialFunction::from_fn(grid.clone(), |r| pair.decaying(r).unwrap().0);
    let us = RadialFunction::from_fn(grid, |r| pair.decaying(s * r).unwrap().0);
    let a = extract_boundary_coefficients(&u, nu).unwrap();
    let b = extract_boundary_coefficients(&us, nu).unwrap();
    let sp = (C64::new(0.5, nu) * s.ln()).exp();
    let sm = (C64::new(0.5, -nu) * s.ln()).exp();
    assert!((b.c_plus - a.c_plus * sp).norm() < 1e-8 * a.c_plus.norm());
    assert!((b.c_minus - a.c_minus * sm).norm() < 1e-8 * a.c_minus.norm());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conjugation_symmetry(nu in 0.2f64..4.0, re in 0.1f64..3.0, im in -3.0f64..3.0, r in 0.01f64..10.0) {
        let w = omega(re, im);
        let wc = omega(re, -im);
        let a = phi_decaying(nu, w, r).unwrap();
        let b = phi_decaying(nu, wc, r).unwrap();
        prop_assert!((a.conj() - b).norm() <= 1e-12 * a.norm().max(1e-300));
    }

    #[test]
    fn wronskian_never_vanishes(nu in 0.2f64..4.0, mu in 0.05f64..20.0, xi in -1.5f64..1.5) {
        let w = SpectralOmega::from_polar(mu, xi).unwrap();
        let (mean, spread) = wronskian_with_spread(nu, w).unwrap();
        prop_assert!(mean.norm() > 0.0);
        prop_assert!(spread < 1e-9, "spread {:e}", spread);
        let closed = SolutionPair::new(nu, w).unwrap().wronskian_closed_form();
        prop_assert!((mean - closed).norm() < 1e-8 * closed.norm());
    }
}
