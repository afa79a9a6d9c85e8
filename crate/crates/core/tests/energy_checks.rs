//! Energy-field checks: closed form against the quadrature oracle, both
//! against a brute-force midpoint rule, interior flatness, the gradient
//! identity, discrete-energy inequalities and the convexity surrogate for
//! the log-kernel positivity.

mod common;

use common::random_valid_curve;
use curvegas_core::{
    discrete_energy, energy, energy_quadrature, gaussian_positivity_lemma, gradient_check,
    Containment, PolynomialCurve, Potential,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn consistent_potential(curve: &PolynomialCurve) -> Potential {
    Potential::from_moments(&curve.forward_moments().unwrap())
}

#[test]
fn closed_form_agrees_with_quadrature_on_random_curves() {
    let mut rng = ChaCha8Rng::seed_from_u64(3001);
    for _ in 0..4 {
        let curve = random_valid_curve(&mut rng, 4, 0.7);
        let p = consistent_potential(&curve);
        let field = energy::ExteriorField::new(&p, &curve).unwrap();
        let mut quad = energy::EnergyQuadrature::new(&p, &curve, 1e-8).unwrap();
        for k in 0..50 {
            let w = Complex64::from_polar(
                1.0 + rng.random_range(0.05..1.0),
                rng.random_range(0.0..2.0 * std::f64::consts::PI),
            );
            let z = curve.evaluate(w);
            let exact = field.eval_at_w(w);
            let (oracle, _) = quad.eval(z).unwrap();
            assert!(
                (exact - oracle).abs() <= 1e-6 * exact.abs().max(1.0),
                "sample {k}: closed form {exact} vs quadrature {oracle}"
            );
        }
    }
}

#[test]
fn quadrature_matches_bruteforce_midpoint_rule() {
    // The most naive check available: midpoint rule over the interior
    // cells of a fine grid. Low accuracy, zero cleverness.
    let curve = PolynomialCurve::new(0.6, vec![ZERO, re(0.15), Complex64::new(0.02, 0.03)])
        .unwrap();
    let p = consistent_potential(&curve);
    let mut quad = energy::EnergyQuadrature::new(&p, &curve, 1e-9).unwrap();

    let m = 600usize;
    let half = 0.6 * (1.0 + 0.5);
    let cell = 2.0 * half / m as f64;
    let mut nodes = Vec::new();
    for iy in 0..m {
        for ix in 0..m {
            let z = Complex64::new(
                -half + cell * (ix as f64 + 0.5),
                -half + cell * (iy as f64 + 0.5),
            );
            if curve.contains(z) == Containment::Inside {
                nodes.push(z);
            }
        }
    }
    let t0 = p.t0();
    let area = std::f64::consts::PI * t0;
    for z in [re(0.05), Complex64::new(-0.1, 0.12), re(1.1), Complex64::new(0.3, 0.9)] {
        let mut u = 0.0;
        for zeta in &nodes {
            let d2 = (z - zeta).norm_sqr();
            if d2 > 0.0 {
                u -= 0.5 * d2.ln() * cell * cell;
            }
        }
        // renormalize the discretized area to reduce grid bias
        let grid_area = nodes.len() as f64 * cell * cell;
        u *= area / grid_area;
        let e_brute = p.value(z) + 2.0 / (std::f64::consts::PI * t0) * (u - u0(&nodes, cell, area));
        let (e, _) = quad.eval(z).unwrap();
        assert!(
            (e - e_brute).abs() <= 2e-3 * e.abs().max(1.0),
            "z = {z}: sweep {e} vs brute force {e_brute}"
        );
    }

    fn u0(nodes: &[Complex64], cell: f64, area: f64) -> f64 {
        let mut u = 0.0;
        for zeta in nodes {
            let d2 = zeta.norm_sqr();
            if d2 > 0.0 {
                u -= 0.5 * d2.ln() * cell * cell;
            }
        }
        u * area / (nodes.len() as f64 * cell * cell)
    }
}

#[test]
fn interior_flatness_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(3002);
    let curve = random_valid_curve(&mut rng, 3, 0.6);
    let p = consistent_potential(&curve);
    let mut quad = energy::EnergyQuadrature::new(&p, &curve, 1e-7).unwrap();
    let band = 2e-3 * curve.diameter();
    let mut tested = 0;
    while tested < 100 {
        let z = curve.centroid()
            + Complex64::from_polar(
                rng.random_range(0.0..0.6 * curve.diameter()),
                rng.random_range(0.0..2.0 * std::f64::consts::PI),
            );
        if curve.contains_with_band(z, band) != Containment::Inside {
            continue;
        }
        tested += 1;
        let (e, _) = quad.eval(z).unwrap();
        assert!(e.abs() <= 1e-6, "interior E({z}) = {e}");
    }
}

#[test]
fn gradient_identity_on_exterior_annulus() {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    for _ in 0..4 {
        let curve = random_valid_curve(&mut rng, 3, 0.6);
        let p = consistent_potential(&curve);
        for k in 0..12 {
            let w = Complex64::from_polar(
                1.0 + rng.random_range(0.03..0.4),
                rng.random_range(0.0..2.0 * std::f64::consts::PI),
            );
            let z = curve.evaluate(w);
            let (lhs, rhs) = gradient_check(&p, &curve, z).unwrap();
            assert!(
                (lhs - rhs).norm() <= 1e-6 * rhs.norm().max(1e-3),
                "sample {k}: {lhs} vs {rhs}"
            );
        }
    }
}

#[test]
fn positivity_lemma_random_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(3004);
    for _ in 0..10_000 {
        let alpha = rng.random_range(0.0..=1.0);
        let x = rng.random_range(1.0..=100.0);
        let f = gaussian_positivity_lemma(alpha, x).unwrap();
        assert!(f >= -1e-14, "f({alpha}, {x}) = {f}");
    }
}

/// I(mu) for a weighted discrete measure with the diagonal removed.
fn discrete_i(p: &Potential, points: &[Complex64], weights: &[f64]) -> f64 {
    let mut i = 0.0;
    for (z, w) in points.iter().zip(weights) {
        i += w * p.value(*z);
    }
    for (a, (za, wa)) in points.iter().zip(weights).enumerate() {
        for (b, (zb, wb)) in points.iter().zip(weights).enumerate() {
            if a != b {
                i -= wa * wb * (za - zb).norm().ln();
            }
        }
    }
    i
}

#[test]
fn segment_convexity_of_energy_functional() {
    // I(mu_t) along the segment between two discrete measures is convex:
    // the t^2 coefficient is the regularized log-kernel quadratic form of
    // the difference, checked by three-point second differences.
    let p = Potential::new(1.0, vec![]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3005);
    for rep in 0..10 {
        let m = 64usize;
        let mut points = Vec::with_capacity(2 * m);
        // mu on the unit disk, mu-tilde on a shifted smaller disk
        for _ in 0..m {
            let r: f64 = rng.random_range(0.0f64..1.0).sqrt();
            let a = rng.random_range(0.0..2.0 * std::f64::consts::PI);
            points.push(Complex64::from_polar(r, a));
        }
        for _ in 0..m {
            let r: f64 = 0.8 * rng.random_range(0.0f64..1.0).sqrt();
            let a = rng.random_range(0.0..2.0 * std::f64::consts::PI);
            points.push(Complex64::new(0.4, 0.1) + Complex64::from_polar(r, a));
        }
        let i_at = |t: f64| -> f64 {
            let mut weights = vec![(1.0 - t) / m as f64; m];
            weights.extend(std::iter::repeat_n(t / m as f64, m));
            discrete_i(&p, &points, &weights)
        };
        let second_diff = i_at(0.0) - 2.0 * i_at(0.5) + i_at(1.0);
        assert!(second_diff >= -1e-9, "rep {rep}: second difference {second_diff}");
    }
}

#[test]
fn discrete_energy_dominates_equilibrium_energy() {
    // I(delta_z) >= I0 - o(1) for configurations in D; I0 is estimated by
    // a brute-force pair rule over the uniform measure on the disk and
    // cross-checked against the closed form 3/4 - log r0.
    let r0 = 0.5f64;
    let t0 = r0 * r0;
    let p = Potential::new(t0, vec![]).unwrap();

    let m = 220usize;
    let cell = 2.0 * r0 / m as f64;
    let mut nodes = Vec::new();
    for iy in 0..m {
        for ix in 0..m {
            let z = Complex64::new(
                -r0 + cell * (ix as f64 + 0.5),
                -r0 + cell * (iy as f64 + 0.5),
            );
            if z.norm() < r0 {
                nodes.push(z);
            }
        }
    }
    let nn = nodes.len() as f64;
    let mut v_term = 0.0;
    for z in &nodes {
        v_term += p.value(*z) / nn;
    }
    let mut log_term = 0.0;
    for (a, za) in nodes.iter().enumerate() {
        for zb in nodes.iter().skip(a + 1) {
            log_term -= 2.0 * (za - zb).norm().ln();
        }
    }
    log_term /= nn * nn;
    let i0 = v_term + log_term;
    let exact = 0.75 - r0.ln();
    assert!((i0 - exact).abs() < 1e-2, "I0 {i0} vs closed form {exact}");

    let mut rng = ChaCha8Rng::seed_from_u64(3006);
    for _ in 0..5 {
        let n = 128usize;
        let z: Vec<Complex64> = (0..n)
            .map(|_| {
                let r = r0 * rng.random_range(0.0f64..1.0).sqrt();
                let a = rng.random_range(0.0..2.0 * std::f64::consts::PI);
                Complex64::from_polar(r, a)
            })
            .collect();
        let (_, i_delta) = discrete_energy(&p, &z);
        assert!(
            i_delta >= i0 - 0.1,
            "I(delta_z) = {i_delta} below I0 = {i0}"
        );
    }
}

#[test]
fn quadrature_near_and_on_boundary() {
    // The swept integrand A(s) dtheta vanishes like s log s at the close
    // approach, so evaluation stays accurate arbitrarily close to the
    // curve: E is continuous across it and tiny just outside.
    let curve = PolynomialCurve::circle(1.0).unwrap();
    let p = consistent_potential(&curve);
    let z = Complex64::new(1.0 + 1e-13, 0.0);
    let e = energy_quadrature(&p, &curve, z, 1e-8).unwrap();
    assert!(e.abs() <= 1e-6, "E just outside the curve = {e}");

    // A point coinciding with a boundary node is flagged, not guessed.
    let on_node = curve.evaluate(Complex64::new(1.0, 0.0));
    match energy_quadrature(&p, &curve, on_node, 1e-8) {
        Err(energy::EnergyError::OnBoundary(_)) => {}
        Ok(v) => panic!("expected OnBoundary, got {v}"),
        Err(e) => panic!("unexpected error {e}"),
    }
}

#[test]
fn inconsistent_pair_is_rejected() {
    let curve = PolynomialCurve::circle(1.0).unwrap();
    let p = Potential::new(0.5, vec![]).unwrap(); // wrong area
    match energy::ExteriorField::new(&p, &curve) {
        Err(energy::EnergyError::InconsistentPair(_)) => {}
        Err(e) => panic!("expected InconsistentPair, got {e}"),
        Ok(_) => panic!("expected InconsistentPair, got a field"),
    }
}
