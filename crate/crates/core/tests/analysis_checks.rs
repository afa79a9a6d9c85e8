//! Analysis-module checks: histogram normalization at arbitrary grids,
//! symmetry of circle moments, and weak convergence for simple test
//! functions with known integrals.

use curvegas_core::{
    analysis, gas_sampler, DomainSpec, MomentVector, PolynomialCurve, Potential, SamplerConfig,
    TestFunction,
};
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::OnceLock;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn circle_samples() -> &'static (gas_sampler::SampleSet, PolynomialCurve, f64) {
    static SET: OnceLock<(gas_sampler::SampleSet, PolynomialCurve, f64)> = OnceLock::new();
    SET.get_or_init(|| {
        let r0 = 0.2f64;
        let t0 = r0 * r0;
        let curve = PolynomialCurve::circle(r0).unwrap();
        let p = Potential::from_moments(&MomentVector::new(t0, vec![]).unwrap());
        let domain = DomainSpec::disk(ZERO, 6.0 * r0);
        let cfg = SamplerConfig {
            n_particles: 48,
            sweeps: 6_000,
            burn_in: 1_000,
            thinning: 25,
            chains: 8,
            seed: 515,
            proposal_sigma: None,
        };
        let set = gas_sampler::run(&cfg, &p, &curve, &domain).unwrap();
        (set, curve, t0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn histogram_normalizes_at_any_resolution(nx in 1usize..48, ny in 1usize..48) {
        let (set, _, _) = circle_samples();
        let est = analysis::histogram(set, analysis::sample_bbox(set).unwrap(), nx, ny).unwrap();
        let total: f64 = est.density.iter().sum::<f64>() * est.cell_area();
        prop_assert!((total - 1.0).abs() < 1e-12, "{total}");
        let counted: u64 = est.counts.iter().sum();
        prop_assert_eq!(counted, est.n_samples);
    }
}

#[test]
fn circle_moments_symmetric_within_errors() {
    let (set, _, t0) = circle_samples();
    // k = 0 exact
    let (m0, _) = analysis::moment_estimate(set, 0, *t0).unwrap();
    assert!((m0 - Complex64::new(*t0, 0.0)).norm() < 1e-15);
    // k = 1..4 vanish by rotational symmetry
    for k in 1..=4 {
        let (mk, se) = analysis::moment_estimate(set, k, *t0).unwrap();
        let se = se.unwrap();
        assert!(
            mk.norm() <= 4.0 * se.max(1e-12),
            "k = {k}: {mk} with stderr {se}"
        );
    }
}

#[test]
fn weak_convergence_circle_known_integrals() {
    let (set, curve, t0) = circle_samples();
    let fns = vec![
        TestFunction::Monomial { a: 0, b: 0 },
        TestFunction::Monomial { a: 1, b: 1 },
        TestFunction::Monomial { a: 2, b: 0 },
    ];
    let rep = analysis::weak_convergence_test(set, curve, *t0, &fns).unwrap();
    // phi = 1: exact on both sides
    assert_eq!(rep.observables[0].predicted, [1.0, 0.0]);
    assert!((rep.observables[0].empirical[0] - 1.0).abs() < 1e-14);
    // phi = |z|^2: integral is t0/2 on a disk of area pi t0
    assert!((rep.observables[1].predicted[0] - t0 / 2.0).abs() < 1e-14);
    // phi = z^2: zero by symmetry
    assert!(rep.observables[2].predicted[0].abs() < 1e-14);
    // all shipped z-scores within the stochastic budget
    assert!(rep.max_abs_z.unwrap() <= 4.0, "{:?}", rep.max_abs_z);
}

#[test]
fn ellipse_weak_convergence_z2_matches_interior_moment() {
    // phi = z^2 on the ellipse: Int phi dmu = v2 / t0.
    let t2 = 0.25f64;
    let t0 = 0.04f64;
    let t = MomentVector::new(t0, vec![ZERO, Complex64::new(t2, 0.0)]).unwrap();
    let (curve, _) =
        curvegas_core::moment_inverse::solve(&t, &curvegas_core::SolverConfig::default()).unwrap();
    let v = curve.interior_moments(2, 1e-9).unwrap();
    let pred = analysis::measure_integral(&curve, &TestFunction::Monomial { a: 2, b: 0 }, t0)
        .unwrap();
    assert!(
        (pred - v[2] / t0).norm() < 1e-12,
        "{pred} vs {}",
        v[2] / t0
    );
}

#[test]
fn support_fraction_counts_dilated_interior() {
    let (set, curve, _) = circle_samples();
    let f1 = analysis::support_fraction(set, curve, 1.0).unwrap();
    let f2 = analysis::support_fraction(set, curve, analysis::default_dilation(48)).unwrap();
    assert!(f2 >= f1);
    assert!(f2 > 0.9);
}
