//! Shared helpers for the integration suites.

use curvegas_core::PolynomialCurve;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random simple positively oriented curve of degree <= n_max enclosing
/// the origin with critical radius <= r_crit_max, positive area and
/// |t2| < 0.45 (so the inverse problem applies).
pub fn random_valid_curve(rng: &mut ChaCha8Rng, n_max: usize, r_crit_max: f64) -> PolynomialCurve {
    loop {
        let n = rng.random_range(0..=n_max);
        let r: f64 = rng.random_range(0.3..1.2);
        let mut a: Vec<Complex64> = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let mag = if j == 0 {
                rng.random_range(0.0..0.1) * r
            } else {
                rng.random_range(0.0..0.5) * r / (j as f64 + 1.0)
            };
            let arg = rng.random_range(0.0..2.0 * std::f64::consts::PI);
            a.push(Complex64::from_polar(mag, arg));
        }
        if n > 0 && a[n].norm() < 1e-3 * r {
            a[n] = Complex64::new(1e-3 * r, 0.0);
        }
        // Shrink the trailing coefficients until the curve is valid.
        for _ in 0..12 {
            let curve = PolynomialCurve::new(r, a.clone()).unwrap();
            let t = curve.forward_moments().unwrap();
            if curve.critical_radius() <= r_crit_max
                && curve.is_simple_positively_oriented()
                && curve.encloses_origin()
                && t.t0() > 0.0
                && t.t(2).norm() < 0.45
            {
                return curve;
            }
            for aj in a.iter_mut().skip(1) {
                *aj *= 0.7;
            }
        }
    }
}
