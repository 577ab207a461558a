use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use calogero::extensions::ExtensionParams;
use calogero::ndim::*;
use calogero::radial::{RadialFunction, RadialGrid};
use calogero::resolvent::{log_bump, norm_estimate_on_grid, ode_residual, resolvent_apply, Resolvent};
use calogero::semigroup::WitnessSearch;
use calogero::solutions::SpectralOmega;
use calogero::{Error, ExecPolicy, C64};
use proptest::prelude::*;
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

fn case_iv() -> ExtensionParams {
    ExtensionParams::real(1.0, 0.0).unwrap()
}

/// `#{n ≥ 0 : n(N-2+n) < -b - ((N-2)/2)²}`: the positive root of the
/// quadratic is `√(-b) - (N-2)/2`.
fn deficient_count_by_root(b: f64, dim: usize) -> usize {
    let root = (-b).sqrt() - (dim as f64 - 2.0) / 2.0;
    if root <= 0.0 {
        0
    } else {
        root.ceil() as usize
    }
}

#[test]
fn effective_coupling_examples() {
    let m = effective_coupling(-5.0, 3, 0).unwrap();
    assert_eq!(m.b_eff, -5.0);
    let m = effective_coupling(-1.0, 2, 1).unwrap();
    assert_eq!(m.lambda, 1.0);
    assert!((m.b_eff + 0.25).abs() < 1e-15);
    assert!(!m.is_deficient());
    assert_eq!(effective_coupling(0.0, 3, 2).unwrap().lambda, 6.0);
    assert!(effective_coupling(-1.0, 1, 0).is_err());
}

#[test]
fn deficient_counts_match_quadratic_root() {
    for (b, dim) in [(-10.0, 3), (-2.0, 2), (-9.0, 4)] {
        let degrees = deficient_degrees(b, dim).unwrap();
        assert_eq!(degrees.len(), deficient_count_by_root(b, dim), "(b, N) = ({b}, {dim})");
        assert_eq!(degrees, (0..degrees.len()).collect::<Vec<_>>());
    }
    assert_eq!(deficient_degrees(-10.0, 3).unwrap(), vec![0, 1, 2]);
    assert_eq!(deficient_degrees(-2.0, 2).unwrap(), vec![0, 1]);
    // n = 2 sits exactly at b_eff = -1/4 and is not deficient
    assert_eq!(effective_coupling(-9.0, 4, 2).unwrap().b_eff, -0.25);
    assert_eq!(deficient_degrees(-9.0, 4).unwrap(), vec![0, 1]);
}

proptest! {
    #[test]
    fn coupling_increases_and_deficient_set_is_initial_segment(b in -200.0f64..5.0, dim in 2usize..9) {
        let modes: Vec<_> = (0..40).map(|n| effective_coupling(b, dim, n).unwrap()).collect();
        for w in modes.windows(2) {
            prop_assert!(w[1].b_eff > w[0].b_eff);
        }
        let degrees = deficient_degrees(b, dim).unwrap();
        prop_assert_eq!(degrees.len(), deficient_count_by_root(b, dim));
        for (n, m) in modes.iter().enumerate() {
            prop_assert_eq!(m.is_deficient(), degrees.contains(&n));
        }
    }

    #[test]
    fn hardy_threshold_needs_no_choice(dim in 2usize..9, excess in 0.0f64..5.0) {
        let hardy = ((dim as f64 - 2.0) / 2.0).powi(2);
        let b = -hardy + excess;
        prop_assert!(deficient_degrees(b, dim).unwrap().is_empty());
        let op = build_nd_generator(b, dim, 3, &BTreeMap::new()).unwrap();
        prop_assert!(op.deficient_degrees().is_empty());
        // slightly below the Hardy constant the radial mode becomes deficient
        prop_assert_eq!(deficient_degrees(-hardy - 1e-3, dim).unwrap(), vec![0]);
    }

    #[test]
    fn mode_maps_are_isometric_and_invertible(
        seed in any::<u64>(),
        dim in 2usize..7,
        degree in 0usize..4,
    ) {
        let g = Arc::new(RadialGrid::log(1e-3, 50.0, 300).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<C64> = (0..g.len()).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let u = RadialFunction::new(g.clone(), vals).unwrap();
        let vals: Vec<C64> = (0..g.len()).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let v = RadialFunction::new(g.clone(), vals).unwrap();
        let label = HarmonicLabel::new(degree, 0);

        let back = mode_maps_roundtrip(&u, label, dim).unwrap();
        let err = back.values().iter().zip(u.values()).map(|(a, b)| (a - b).norm() / b.norm().max(1e-300)).fold(0.0, f64::max);
        prop_assert!(err < 1e-12, "roundtrip error {err:e}");

        let fu = lift(&u, label, dim).unwrap();
        let fv = lift(&v, label, dim).unwrap();
        prop_assert!((fu.norm() / u.norm() - 1.0).abs() < 1e-10);
        let ip = fu.inner(&fv).unwrap();
        let ip0 = u.inner(&v).unwrap();
        prop_assert!((ip - ip0).norm() < 1e-10 * u.norm() * v.norm());

        // a different harmonic sees nothing
        let other = HarmonicLabel::new(degree + 1, 0);
        prop_assert!(project(&fu, other).is_none());
        let fo = lift(&v, other, dim).unwrap();
        prop_assert_eq!(fu.inner(&fo).unwrap(), c(0.0, 0.0));
    }
}

#[test]
fn harmonic_labels_are_validated() {
    let g = grid();
    let f = smooth(&g, 1.0);
    // degree 1 in N = 2 has two harmonics
    assert!(lift(&f, HarmonicLabel::new(1, 1), 2).is_ok());
    assert!(lift(&f, HarmonicLabel::new(1, 2), 2).is_err());
    let h = lift(&f, HarmonicLabel::new(0, 0), 3).unwrap();
    assert!(SeparableFunction::new(3, vec![h.terms()[0].clone(), h.terms()[0].clone()]).is_err());
}

fn band_limited(dim: usize, labels: &[HarmonicLabel]) -> SeparableFunction {
    let g = grid();
    let mut acc: Option<SeparableFunction> = None;
    for (k, &label) in labels.iter().enumerate() {
        let term = lift(&smooth(&g, 0.5 + k as f64), label, dim).unwrap();
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term).unwrap(),
        });
    }
    acc.unwrap()
}

#[test]
fn parseval_within_band() {
    let labels = [
        HarmonicLabel::new(0, 0),
        HarmonicLabel::new(1, 0),
        HarmonicLabel::new(1, 2),
        HarmonicLabel::new(2, 4),
        HarmonicLabel::new(3, 1),
    ];
    let f = band_limited(3, &labels);
    let full = ModeDecomposition::decompose(&f, -10.0, 3).unwrap();
    assert!((full.norm() / f.norm() - 1.0).abs() < 1e-8);
    let back = full.assemble().unwrap();
    assert!((back.norm() / f.norm() - 1.0).abs() < 1e-12);

    let cut = ModeDecomposition::decompose(&f, -10.0, 1).unwrap();
    assert_eq!(cut.components.len(), 3);
    assert!(cut.norm() < f.norm());
    let dropped: f64 = labels
        .iter()
        .filter(|l| l.degree > 1)
        .map(|&l| project(&f, l).unwrap().norm().powi(2))
        .sum();
    assert!((cut.norm().powi(2) + dropped - f.norm().powi(2)).abs() < 1e-8 * f.norm().powi(2));
}

#[test]
fn friedrichs_dirichlet_case_matches_closed_form() {
    // b = 0 is the Dirichlet Laplacian. For f = r e^{-r} the decaying
    // solution of ω² u - u'' = f with u(0) = 0 is
    // u = (A r + B) e^{-r} - B e^{-ωr}, A = 1/(ω² - 1), B = -2A/(ω² - 1).
    let g = Arc::new(RadialGrid::hybrid(1e-6, 60.0, 60, 0.01).unwrap());
    let f = RadialFunction::from_fn(g.clone(), |r| c(r * (-r).exp(), 0.0));
    for z in [c(-4.0, 0.0), c(-0.25, 0.0), c(1.0, 2.0), c(-3.0, -1.0)] {
        let w = (-z).sqrt();
        let a = 1.0 / (w * w - 1.0);
        let b = -2.0 * a / (w * w - 1.0);
        let u = friedrichs_resolvent(0.0, z, &f).unwrap();
        let exact = RadialFunction::from_fn(g.clone(), |r| (a * r + b) * (-r).exp() - b * (-w * r).exp());
        let err = u.sub(&exact).unwrap().max_abs() / exact.max_abs();
        assert!(err < 1e-8, "z = {z}: {err:e}");
    }
}

#[test]
fn friedrichs_ode_residual_and_regular_boundary() {
    let g = Arc::new(RadialGrid::hybrid(1e-6, 60.0, 120, 0.005).unwrap());
    let f = smooth(&g, 2.0);
    let z = c(-1.0, 0.0);
    for b_eff in [0.75, 0.0, 3.0] {
        let u = friedrichs_resolvent(b_eff, z, &f).unwrap();
        let res = ode_residual(&u, &f, z, b_eff).unwrap();
        assert!(res < 1e-6, "b_eff = {b_eff}: residual {res:e}");
        // regular at 0: u ~ r^{1/2+σ}
        let sigma = (b_eff + 0.25f64).sqrt();
        let ratio = |i: usize| u.values()[i].norm() / u.points()[i].powf(0.5 + sigma);
        let (r1, r2) = (ratio(5), ratio(60));
        assert!((r1 / r2 - 1.0).abs() < 1e-3, "b_eff = {b_eff}: {r1} vs {r2}");
    }
}

#[test]
fn friedrichs_limiting_order_zero() {
    let g = Arc::new(RadialGrid::hybrid(1e-6, 60.0, 120, 0.005).unwrap());
    let f = smooth(&g, 2.0);
    let z = c(-1.0, 0.0);
    let u = friedrichs_resolvent(-0.25, z, &f).unwrap();
    let res = ode_residual(&u, &f, z, -0.25).unwrap();
    assert!(res < 1e-5, "residual {res:e}");
}

#[test]
fn friedrichs_norm_is_inverse_distance() {
    let g = grid();
    for b_eff in [0.75, -0.25, 2.0] {
        let op = FriedrichsResolvent::new(b_eff).unwrap();
        for (z, dist) in [(c(-1.0, 0.0), 1.0), (c(-0.3, 0.0), 0.3), (c(1.0, 1.0), 1.0)] {
            let omega = SpectralOmega::from_z(z).unwrap();
            let n = norm_estimate_on_grid(&op, z, &g, 6, omega).unwrap();
            assert!(n <= (1.0 + 1e-3) / dist, "b_eff = {b_eff}, z = {z}: {n} > 1/{dist}");
        }
    }
}

#[test]
fn friedrichs_is_selfadjoint() {
    let g = grid();
    let op = FriedrichsResolvent::new(0.75).unwrap();
    let z = c(-0.5, 0.7);
    let f = smooth(&g, 1.0);
    let h = smooth(&g, 3.0).scale(c(0.3, -1.1));
    let lhs = op.apply(z, &f).unwrap().inner(&h).unwrap();
    let rhs = f.inner(&op.apply_adjoint(z, &h).unwrap()).unwrap();
    assert!((lhs - rhs).norm() < 1e-6 * lhs.norm(), "{lhs} vs {rhs}");
    assert!(op.apply(c(2.0, 0.0), &f).is_err());
}

#[test]
fn invalid_choices_are_rejected() {
    let mut choices = BTreeMap::new();
    choices.insert(0, case_iv());
    // (b, N) = (-2, 2) needs degrees 0 and 1
    match build_nd_generator(-2.0, 2, 3, &choices) {
        Err(Error::InvalidChoice { mode: 1, .. }) => {}
        other => panic!("expected missing choice for degree 1, got {other:?}"),
    }
    // A = (1, 1) is selfadjoint (Case I) for every ν
    choices.insert(1, ExtensionParams::real(1.0, 1.0).unwrap());
    match build_nd_generator(-2.0, 2, 3, &choices) {
        Err(Error::InvalidChoice { mode: 1, .. }) => {}
        other => panic!("expected Case I rejection, got {other:?}"),
    }
    choices.insert(1, case_iv());
    choices.insert(2, case_iv());
    match build_nd_generator(-2.0, 2, 3, &choices) {
        Err(Error::InvalidChoice { mode: 2, .. }) => {}
        other => panic!("expected Friedrichs degree rejection, got {other:?}"),
    }
    choices.remove(&2);
    let op = build_nd_generator(-2.0, 2, 3, &choices).unwrap();
    assert_eq!(op.deficient_degrees(), &[0, 1]);
    assert_eq!(op.deficient_harmonic_count(), 3);
    // a band below the deficient degrees needs only the choices inside it
    let mut low = BTreeMap::new();
    low.insert(0, case_iv());
    assert!(build_nd_generator(-2.0, 2, 0, &low).is_ok());
}

fn generator_minus_two_in_2d() -> NdGenerator {
    let mut choices = BTreeMap::new();
    choices.insert(0, case_iv());
    // |κ| = e^{3νπ/4} with ν = 1: Case III, θ_A = π/4
    choices.insert(1, ExtensionParams::real(1.0, (-3.0 * PI / 4.0).exp()).unwrap());
    build_nd_generator(-2.0, 2, 2, &choices).unwrap()
}

#[test]
fn assembled_resolvent_is_block_diagonal() {
    let op = generator_minus_two_in_2d();
    let g = grid();
    let label = HarmonicLabel::new(1, 1);
    let f = ModeDecomposition::decompose(&lift(&smooth(&g, 1.0), label, 2).unwrap(), -2.0, 2).unwrap();
    let u = nd_resolvent_apply(&op, c(-1.0, 0.0), &f).unwrap();
    assert_eq!(u.components.len(), 1);
    assert_eq!(u.components[0].label(), label);
    assert!(u.norm() > 0.0);
}

#[test]
fn single_deficient_mode_agrees_with_direct_resolvent() {
    // (b, N) = (-1, 3): only the radial mode is deficient, ν = √(3/4)
    let mut choices = BTreeMap::new();
    choices.insert(0, case_iv());
    let op = build_nd_generator(-1.0, 3, 2, &choices).unwrap();
    assert_eq!(op.deficient_degrees(), &[0]);
    let g = grid();
    let gr = smooth(&g, 1.5);
    let f = ModeDecomposition::decompose(&lift(&gr, HarmonicLabel::new(0, 0), 3).unwrap(), -1.0, 2).unwrap();
    let z = c(-0.7, 0.4);
    let u = nd_resolvent_apply(&op, z, &f).unwrap();
    let direct = resolvent_apply(&case_iv(), 0.75f64.sqrt(), z, &gr).unwrap();
    let err = u.components[0].profile.sub(&direct).unwrap().norm() / direct.norm();
    assert!(err < 1e-14, "{err:e}");
}

#[test]
fn first_resolvent_identity_blockwise_and_global() {
    let op = generator_minus_two_in_2d();
    let labels = [
        HarmonicLabel::new(0, 0),
        HarmonicLabel::new(1, 0),
        HarmonicLabel::new(1, 1),
        HarmonicLabel::new(2, 1),
    ];
    let f = ModeDecomposition::decompose(&band_limited(2, &labels), -2.0, 2).unwrap();
    let (z1, z2) = (c(-1.0, 0.0), c(-2.0, 0.5));
    let r1 = op.apply(z1, &f, ExecPolicy::Parallel).unwrap();
    let r2 = op.apply(z2, &f, ExecPolicy::Sequential).unwrap();
    let r12 = op.apply(z1, &r2, ExecPolicy::Parallel).unwrap();
    let defect = r1.sub(&r2).unwrap().sub(&r12.scale(z1 - z2)).unwrap();
    assert!(
        defect.norm() / f.norm() < 1e-5,
        "global defect {:e}",
        defect.norm() / f.norm()
    );
    for (d, fc) in defect.components.iter().zip(&f.components) {
        let rel = d.profile.norm() / fc.profile.norm();
        assert!(rel < 1e-5, "degree {}: {rel:e}", d.mode.degree);
    }
    // Parseval for the output
    let sum: f64 = r1.components.iter().map(|c| c.profile.norm().powi(2)).sum();
    let assembled = r1.assemble().unwrap();
    assert!((assembled.norm().powi(2) / sum - 1.0).abs() < 1e-10);
}

#[test]
fn spectrum_hit_names_the_mode() {
    let op = generator_minus_two_in_2d();
    // the Case III block of degree 1 has eigenvalues; hit one of them
    let a = ExtensionParams::real(1.0, (-3.0 * PI / 4.0).exp()).unwrap();
    let z = calogero::extensions::eigenvalues(&a, 1.0, 0..=0).unwrap()[0].z;
    let g = grid();
    let f =
        ModeDecomposition::decompose(&lift(&smooth(&g, 1.0), HarmonicLabel::new(1, 0), 2).unwrap(), -2.0, 2).unwrap();
    match nd_resolvent_apply(&op, z, &f) {
        Err(Error::InMode { degree: 1, inner }) => assert!(matches!(*inner, Error::SpectrumHit { .. })),
        other => panic!("expected a spectrum hit in degree 1, got {other:?}"),
    }
}

#[test]
fn hardy_form_is_nonnegative_above_threshold() {
    let g = Arc::new(RadialGrid::hybrid(1e-4, 50.0, 200, 0.01).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = f64::INFINITY;
    for _ in 0..20 {
        let (r0, w) = (rng.gen_range(0.05..5.0), rng.gen_range(0.3..2.0));
        let u = log_bump(g.clone(), r0, w).scale(c(rng.gen_range(0.5..2.0), 0.0));
        let norm = calogero::ndim::quadratic_form(&u, 0.0).abs();
        for b_eff in [-0.25, 0.0, 1.0] {
            let q = quadratic_form(&u, b_eff);
            worst = worst.min(q / norm);
        }
    }
    assert!(worst >= -1e-4, "most negative normalized form {worst:e}");
    // and it does go negative below the threshold for a wide enough bump
    let u = log_bump(g.clone(), 1.0, 2.0);
    assert!(quadratic_form(&u, -1.0) < 0.0);
}

#[test]
fn friedrichs_semigroup_has_no_growth_witness() {
    let g = Arc::new(RadialGrid::hybrid(1e-7, 200.0, 40, 0.05).unwrap());
    let op = FriedrichsResolvent::new(1.0)
        .unwrap()
        .with_policy(ExecPolicy::Sequential);
    let search = WitnessSearch {
        theta_a: PI / 2.0,
        nodes: 64,
        max_nodes: 512,
        tolerance: 1e-6,
        policy: ExecPolicy::Parallel,
    };
    let probes = [(1.0, 2.0), (PI.exp(), 2.0), ((-PI).exp(), 2.0)];
    let w = search.run(&op, g, &probes, &[0.01, 0.05, 0.2]).unwrap();
    assert!(w.is_none(), "unexpected witness {:?}", w.map(|w| (w.t, w.ratio)));
}

#[test]
fn mode_files_roundtrip() {
    let op = generator_minus_two_in_2d();
    let labels = [HarmonicLabel::new(0, 0), HarmonicLabel::new(2, 1)];
    let f = ModeDecomposition::decompose(&band_limited(2, &labels), -2.0, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let header = write_mode_files(dir.path(), "modes", &f, Some(&op)).unwrap();
    let (h, back) = read_mode_files(&header).unwrap();
    assert_eq!(back, f);
    assert_eq!(h.modes[0].extension, Some(BlockChoice::extension(&case_iv())));
    assert_eq!(
        h.modes[1].extension,
        Some(BlockChoice::Friedrichs(FriedrichsTag::Friedrichs))
    );
    let text = std::fs::read_to_string(&header).unwrap();
    assert!(text.contains("\"N\": 2") && text.contains("\"friedrichs\""));
}
