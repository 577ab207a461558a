use std::sync::Arc;

use calogero::extensions::ExtensionParams;
use calogero::radial::{fornberg_weights, RadialFunction, RadialGrid};
use calogero::resolvent::*;
use calogero::solutions::{SolutionPair, SpectralOmega};
use calogero::special_functions::alpha_coefficient;
use calogero::{ExecPolicy, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn grid() -> Arc<RadialGrid> {
    Arc::new(RadialGrid::hybrid(1e-6, 60.0, 60, 0.02).unwrap())
}

fn smooth(grid: &Arc<RadialGrid>, shift: f64) -> RadialFunction {
    RadialFunction::from_fn(grid.clone(), move |r| {
        c(r * r * (-(r - shift).powi(2) / 2.0).exp(), 0.3 * r * (-r).exp())
    })
}

fn random_smooth(grid: &Arc<RadialGrid>, rng: &mut ChaCha8Rng) -> RadialFunction {
    let centers: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(0.3..6.0),
                rng.gen_range(0.3..1.5),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    RadialFunction::from_fn(grid.clone(), move |r| {
        centers
            .iter()
            .map(|&(m, w, a, b)| c(a, b) * (r * (-((r - m) / w).powi(2)).exp()))
            .sum()
    })
}

#[test]
fn ode_residual_and_boundary_condition() {
    let g = grid();
    let f = smooth(&g, 2.0);
    for (nu, a, z) in [
        (1.0, ExtensionParams::real(1.0, 0.0).unwrap(), c(-1.0, 0.0)),
        (1.0, ExtensionParams::real(1.0, 1.0).unwrap(), c(-2.0, 0.5)),
        (
            0.5,
            ExtensionParams::new(c(1.0, 0.0), c(0.3, 2.0)).unwrap(),
            c(-0.5, -1.0),
        ),
        (
            2.0,
            ExtensionParams::new(c(0.2, 1.0), c(1.0, 0.0)).unwrap(),
            c(1.0, 3.0),
        ),
    ] {
        let q = ResolventQuery::new(a, nu, z).unwrap();
        let u = q.apply(&f).unwrap();
        let res = ode_residual(&u, &f, z, -0.25 - nu * nu).unwrap();
        assert!(res < 1e-5, "ν={nu} z={z}: residual {res:e}");
        let mismatch = q.boundary_mismatch(&u).unwrap();
        assert!(mismatch < 1e-6, "ν={nu} z={z}: boundary mismatch {mismatch:e}");
    }
}

#[test]
fn t_operator_residual_with_indicator_source() {
    let nu = 1.0;
    let w = SpectralOmega::new(c(1.0, 0.0)).unwrap();
    let k = GreenKernel::new(nu, w).unwrap();
    // φ₀ 1_[1,2]; the grid is refined to step 1e-4 around the jumps of f, which
    // a sampled function can only resolve to within one cell
    let mut pts: Vec<f64> = RadialGrid::hybrid(1e-6, 40.0, 120, 0.005).unwrap().points().to_vec();
    pts.retain(|r| (r - 1.0).abs() > 0.05 && (r - 2.0).abs() > 0.05);
    pts.extend((-500..=500).flat_map(|k| [1.0 + 1e-4 * k as f64, 2.0 + 1e-4 * k as f64]));
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let g = Arc::new(RadialGrid::from_points(pts).unwrap());
    let pair = SolutionPair::new(nu, w).unwrap();
    let f = RadialFunction::from_fn(g.clone(), |r| {
        if (1.0..=2.0).contains(&r) {
            pair.decaying(r).unwrap().0
        } else {
            c(0.0, 0.0)
        }
    });
    let u = k.apply_t(&f).unwrap();
    // away from the jumps the equation holds; derivative is continuous across them
    let r = g.points();
    let i1 = r.iter().position(|&x| x == 1.0).unwrap();
    let i2 = r.iter().position(|&x| x == 2.0).unwrap();
    // one-sided second-order derivatives from either side of each jump of f
    let one_sided = |i: usize, idx: [usize; 3]| -> C64 {
        let xs: Vec<f64> = idx.iter().map(|&j| r[j]).collect();
        let w = fornberg_weights(r[i], &xs, 1);
        idx.iter().zip(&w[1]).map(|(&j, c)| u.values()[j] * c).sum()
    };
    for i in [i1, i2] {
        let left = one_sided(i, [i - 3, i - 2, i - 1]);
        let right = one_sided(i, [i + 1, i + 2, i + 3]);
        assert!(
            (left - right).norm() < 1e-3 * left.norm().max(1e-3),
            "kink at r = {}: {left} vs {right}",
            r[i]
        );
    }
    // the equation holds on each piece where f is smooth
    let z = -w.omega() * w.omega();
    // (cells within a few nodes of a jump see the interpolated step and are left out)
    for range in [0..i1 - 4, i1 + 4..i2 - 3, i2 + 5..r.len()] {
        let sub = Arc::new(RadialGrid::from_points(r[range.clone()].to_vec()).unwrap());
        let us = RadialFunction::new(sub.clone(), u.values()[range.clone()].to_vec()).unwrap();
        let fs = RadialFunction::new(sub, f.values()[range.clone()].to_vec()).unwrap();
        let res = ode_residual(&us, &fs, z, -0.25 - nu * nu).unwrap();
        assert!(res < 1e-6, "{range:?}: {res:e}");
    }
}

#[test]
fn first_resolvent_identity() {
    let g = grid();
    let f = smooth(&g, 1.0);
    let a = ExtensionParams::real(1.0, 0.0).unwrap();
    let (z1, z2) = (c(-1.0, 0.0), c(-2.0, 0.0));
    let r1 = resolvent_apply(&a, 1.0, z1, &f).unwrap();
    let r2 = resolvent_apply(&a, 1.0, z2, &f).unwrap();
    let r12 = resolvent_apply(&a, 1.0, z1, &r2).unwrap();
    // (L - z)^{-1} convention: R(z₁) - R(z₂) = (z₁ - z₂) R(z₁) R(z₂)
    let lhs = r1.sub(&r2).unwrap();
    let defect = lhs.axpy(-(z1 - z2), &r12).unwrap().norm() / f.norm();
    assert!(defect < 1e-5, "defect {defect:e}");
}

#[test]
fn kernel_properties() {
    let nu = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let w = SpectralOmega::new(c(1.0, 0.0)).unwrap();
    let k = GreenKernel::new(nu, w).unwrap();
    for _ in 0..100 {
        let (r, s) = (rng.gen_range(0.01..10.0), rng.gen_range(0.01..10.0));
        let (a, b) = (k.eval(r, s).unwrap(), k.eval(s, r).unwrap());
        assert!((a - b).norm() <= 1e-14 * a.norm());
        // real ω: both solutions over W are real, so the kernel is real
        assert!(a.im.abs() < 1e-12 * a.norm(), "G({r}, {s}) = {a}");
    }
}

#[test]
fn kernel_exponential_bound_on_grid() {
    let nu = 1.0;
    for (mu, xi) in [(1.0, 0.0), (2.0, 0.5), (0.5, -0.8), (1.0, 1.2), (3.0, -0.3)] {
        let w = SpectralOmega::from_polar(mu, xi).unwrap();
        let k = GreenKernel::new(nu, w).unwrap();
        let pair = SolutionPair::new(nu, w).unwrap();
        let rs: Vec<f64> = (0..50).map(|i| 0.01 * 1.15f64.powi(i)).collect();
        // C from the solution bounds: |φ₀| ≤ C₀ e^{-Re ω r}, |φ₁| ≤ C₁ e^{Re ω r}, C² = C₀ C₁ / |W|
        let c0 = rs
            .iter()
            .map(|&r| pair.scaled_at(r).unwrap().q.norm())
            .fold(0.0, f64::max);
        let c1 = rs
            .iter()
            .map(|&r| pair.scaled_at(r).unwrap().p.norm())
            .fold(0.0, f64::max);
        let c2 = c0 * c1 / k.wronskian().norm();
        for &r in &rs {
            for &s in &rs {
                let g = k.eval(r, s).unwrap().norm();
                assert!(g <= c2 * (-w.omega().re * (r - s).abs()).exp() * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn selfadjoint_symmetry_and_duality() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let nu = 1.0;
    let sa = ExtensionParams::real(1.0, 1.0).unwrap();
    let z = c(-1.0, 0.0);
    for _ in 0..5 {
        let f = random_smooth(&g, &mut rng);
        let h = random_smooth(&g, &mut rng);
        let lhs = resolvent_apply(&sa, nu, z, &f).unwrap().inner(&h).unwrap();
        let rhs = f.inner(&resolvent_apply(&sa, nu, z, &h).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-5 * lhs.norm().max(1e-3));
    }
    let a = ExtensionParams::new(c(1.0, 0.5), c(0.2, -2.0)).unwrap();
    let op = ExtensionResolvent::new(a, nu);
    for z in [c(-1.0, 0.0), c(-0.5, 2.0)] {
        for _ in 0..5 {
            let f = random_smooth(&g, &mut rng);
            let h = random_smooth(&g, &mut rng);
            let lhs = op.apply(z, &f).unwrap().inner(&h).unwrap();
            let rhs = f.inner(&op.apply_adjoint(z, &h).unwrap()).unwrap();
            assert!((lhs - rhs).norm() < 1e-5 * lhs.norm().max(1e-3), "z={z}");
        }
    }
}

#[test]
fn real_omega_t_is_symmetric() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = GreenKernel::new(0.8, SpectralOmega::new(c(1.3, 0.0)).unwrap()).unwrap();
    for _ in 0..5 {
        let f = random_smooth(&g, &mut rng).map(|_, v| c(v.re, 0.0));
        let h = random_smooth(&g, &mut rng).map(|_, v| c(v.re, 0.0));
        // symmetric kernel: ∫ (T f) h = ∫ f (T h)
        let lhs = k.apply_t(&f).unwrap().pairing(&h).unwrap();
        let rhs = f.pairing(&k.apply_t(&h).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-6 * lhs.norm(), "{lhs} vs {rhs}");
    }
}

#[test]
fn krein_difference_is_rank_one() {
    let g = grid();
    let f = smooth(&g, 1.5);
    let nu = 1.0;
    let z = c(-1.0, 0.7);
    let a = ExtensionParams::real(1.0, 0.0).unwrap();
    let b = ExtensionParams::new(c(0.4, 1.0), c(1.0, 0.2)).unwrap();
    let d = resolvent_apply(&a, nu, z, &f)
        .unwrap()
        .sub(&resolvent_apply(&b, nu, z, &f).unwrap())
        .unwrap();
    let phi = SolutionPair::new(nu, SpectralOmega::from_z(z).unwrap())
        .unwrap()
        .decaying_on(g.clone(), ExecPolicy::Sequential)
        .unwrap();
    let coef = d.inner(&phi).unwrap() / phi.inner(&phi).unwrap();
    let rest = d.axpy(-coef, &phi).unwrap().norm() / d.norm();
    assert!(rest < 1e-6, "{rest:e}");
}

#[test]
fn zero_in_zero_out_and_spectrum_hit() {
    let nu = 1.0;
    let al = alpha_coefficient(nu).unwrap().value;
    let a = ExtensionParams::new(c(1.0, 0.0), al.conj() / al).unwrap();
    let err = ResolventQuery::new(a, nu, c(-1.0, 0.0)).unwrap_err();
    assert!(matches!(err, calogero::Error::SpectrumHit { .. }));
}

#[test]
fn norm_estimate_sectorial_and_scaling() {
    let nu = 1.0;
    let a = ExtensionParams::real(1.0, 0.0).unwrap();
    let ray = C64::from_polar(1.0, 2.5);
    let mut products = Vec::new();
    for k in 0..5 {
        let m = (2.0 * std::f64::consts::PI / nu * k as f64 / 4.0).exp();
        let z = ray * m;
        products.push(m * resolvent_norm_estimate(&a, nu, z, 4).unwrap());
    }
    let max = products.iter().cloned().fold(0.0, f64::max);
    let min = products.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max < 10.0 && min > 0.1, "{products:?}");
    // scaling: ‖R(s² z)‖ = ‖R(z)‖ / s² for s = e^{π/ν}
    let s2 = (2.0 * std::f64::consts::PI / nu).exp();
    let n1 = resolvent_norm_estimate(&a, nu, ray, 4).unwrap();
    let n2 = resolvent_norm_estimate(&a, nu, ray * s2, 4).unwrap();
    assert!((n2 * s2 / n1 - 1.0).abs() < 1e-4, "{} vs {}", n2 * s2, n1);
}

#[test]
fn norm_blows_up_near_eigenvalue() {
    let nu = 1.0;
    let a = ExtensionParams::real(1.0, 1.0).unwrap();
    let ev = calogero::extensions::eigenvalues(&a, nu, 0..=0).unwrap()[0].z;
    let mut products = Vec::new();
    for d in [1e-1, 1e-2, 1e-3] {
        let z = ev * (1.0 + d);
        let dist = (z - ev).norm();
        products.push(dist * resolvent_norm_estimate(&a, nu, z, 3).unwrap());
    }
    // first-order pole: dist · ‖R‖ stays bounded below (and roughly constant)
    for p in &products {
        assert!(*p > 0.3 * products[2], "{products:?}");
    }
}
