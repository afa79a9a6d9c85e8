//! Sample-set statistics: density histograms, support fractions, moment
//! estimators and weak-convergence checks against the predicted uniform
//! measure on the curve interior.

use crate::curve::{Containment, CurveError, PolynomialCurve};
use crate::gas_sampler::SampleSet;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("empty sample set")]
    EmptyInput,
    #[error("standard errors need at least two chains, got {0}")]
    TooFewChains(u32),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Binned particle positions normalized to a probability density.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    pub counts: Vec<u64>,
    /// counts / (n_binned * cell_area), row major.
    pub density: Vec<f64>,
    pub n_samples: u64,
}

impl DensityEstimate {
    pub fn cell_area(&self) -> f64 {
        ((self.x1 - self.x0) / self.nx as f64) * ((self.y1 - self.y0) / self.ny as f64)
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(
            self.x0 + (self.x1 - self.x0) * (ix as f64 + 0.5) / self.nx as f64,
            self.y0 + (self.y1 - self.y0) * (iy as f64 + 0.5) / self.ny as f64,
        )
    }

    /// CSV with columns x, y, density (cell centers).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,density")?;
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let c = self.cell_center(ix, iy);
                writeln!(w, "{},{},{}", c.re, c.im, self.density[iy * self.nx + ix])?;
            }
        }
        Ok(())
    }
}

/// Bin all recorded particle positions on an nx-by-ny grid over the given
/// box; density is normalized by binned count times cell area, so it
/// integrates to one over the grid.
pub fn histogram(
    samples: &SampleSet,
    bbox: (f64, f64, f64, f64),
    nx: usize,
    ny: usize,
) -> Result<DensityEstimate, AnalysisError> {
    if samples.records.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let (x0, y0, x1, y1) = bbox;
    let mut counts = vec![0u64; nx * ny];
    let mut binned = 0u64;
    for rec in &samples.records {
        for z in &rec.z {
            let fx = (z.re - x0) / (x1 - x0);
            let fy = (z.im - y0) / (y1 - y0);
            if !(0.0..1.0).contains(&fx) || !(0.0..1.0).contains(&fy) {
                continue;
            }
            let ix = (fx * nx as f64) as usize;
            let iy = (fy * ny as f64) as usize;
            counts[iy * nx + ix] += 1;
            binned += 1;
        }
    }
    if binned == 0 {
        return Err(AnalysisError::EmptyInput);
    }
    let cell = ((x1 - x0) / nx as f64) * ((y1 - y0) / ny as f64);
    let density = counts
        .iter()
        .map(|c| *c as f64 / (binned as f64 * cell))
        .collect();
    Ok(DensityEstimate {
        x0,
        y0,
        x1,
        y1,
        nx,
        ny,
        counts,
        density,
        n_samples: binned,
    })
}

/// Bounding box of all recorded points, padded by a small margin.
pub fn sample_bbox(samples: &SampleSet) -> Result<(f64, f64, f64, f64), AnalysisError> {
    let mut b = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for rec in &samples.records {
        for z in &rec.z {
            b.0 = b.0.min(z.re);
            b.1 = b.1.min(z.im);
            b.2 = b.2.max(z.re);
            b.3 = b.3.max(z.im);
        }
    }
    if !b.0.is_finite() {
        return Err(AnalysisError::EmptyInput);
    }
    let pad = 1e-9 + 1e-6 * ((b.2 - b.0).abs() + (b.3 - b.1).abs());
    Ok((b.0 - pad, b.1 - pad, b.2 + pad, b.3 + pad))
}

/// Fraction of recorded points inside the curve dilated about its area
/// centroid by the given factor.
pub fn support_fraction(
    samples: &SampleSet,
    curve: &PolynomialCurve,
    dilation: f64,
) -> Result<f64, AnalysisError> {
    if samples.records.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    if dilation <= 0.0 {
        return Ok(0.0);
    }
    if dilation.is_infinite() {
        return Ok(1.0);
    }
    let c = curve.centroid();
    let mut inside = 0u64;
    let mut total = 0u64;
    for rec in &samples.records {
        for z in &rec.z {
            total += 1;
            let pulled = c + (z - c) / dilation;
            if curve.contains(pulled) != Containment::Outside {
                inside += 1;
            }
        }
    }
    Ok(inside as f64 / total as f64)
}

/// Default dilation absorbing the finite-N soft edge of width
/// O(sqrt(t0 / N)).
pub fn default_dilation(n_particles: usize) -> f64 {
    1.0 + 2.0 / (n_particles as f64).sqrt()
}

/// Chain-decorrelated estimate of E[(t0/N) sum_i z_i^k]: grand mean plus
/// a batch-means standard error across chains (None with fewer than two
/// chains).
pub fn moment_estimate(
    samples: &SampleSet,
    k: usize,
    t0: f64,
) -> Result<(Complex64, Option<f64>), AnalysisError> {
    if samples.records.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let n = samples.n_particles() as f64;
    let chains = samples.chains();
    let mut chain_sums = vec![ZERO; chains as usize];
    let mut chain_counts = vec![0u64; chains as usize];
    for rec in &samples.records {
        let mut s = ZERO;
        for z in &rec.z {
            s += z.powi(k as i32);
        }
        chain_sums[rec.chain as usize] += s * (t0 / n);
        chain_counts[rec.chain as usize] += 1;
    }
    let means: Vec<Complex64> = chain_sums
        .iter()
        .zip(&chain_counts)
        .filter(|(_, c)| **c > 0)
        .map(|(s, c)| s / *c as f64)
        .collect();
    let m = means.len();
    let grand = means.iter().sum::<Complex64>() / m as f64;
    let stderr = if m >= 2 {
        let var: f64 = means.iter().map(|x| (x - grand).norm_sqr()).sum::<f64>()
            / (m as f64 - 1.0);
        Some((var / m as f64).sqrt())
    } else {
        None
    };
    Ok((grand, stderr))
}

/// Test functions shipped for weak-convergence checks.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    /// z^a zbar^b.
    Monomial { a: usize, b: usize },
    /// Smooth bump exp(1 - 1/(1 - s^2)) with s = |z - center| / radius.
    Bump { center: [f64; 2], radius: f64 },
}

impl TestFunction {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            TestFunction::Monomial { a, b } => z.powi(*a as i32) * z.conj().powi(*b as i32),
            TestFunction::Bump { center, radius } => {
                let s = (z - Complex64::new(center[0], center[1])).norm() / radius;
                if s >= 1.0 {
                    ZERO
                } else {
                    Complex64::new((1.0 - 1.0 / (1.0 - s * s)).exp(), 0.0)
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestFunction::Monomial { a, b } => format!("z^{a} zbar^{b}"),
            TestFunction::Bump { center, radius } => {
                format!("bump({},{};{})", center[0], center[1], radius)
            }
        }
    }
}

/// The default library: monomials z^a zbar^b with a + b <= 4 plus a bump
/// centered on the curve centroid.
pub fn default_test_functions(curve: &PolynomialCurve) -> Vec<TestFunction> {
    let mut fns = Vec::new();
    for total in 0..=4usize {
        for a in 0..=total {
            fns.push(TestFunction::Monomial { a, b: total - a });
        }
    }
    let c = curve.centroid();
    fns.push(TestFunction::Bump {
        center: [c.re, c.im],
        radius: 0.75 * curve.diameter() / 2.0,
    });
    fns
}

/// Integral of phi against the uniform probability measure on the curve
/// interior. Monomials reduce exactly to residues; bumps use the polar
/// area rule about the bump center.
pub fn measure_integral(
    curve: &PolynomialCurve,
    phi: &TestFunction,
    t0: f64,
) -> Result<Complex64, AnalysisError> {
    match phi {
        TestFunction::Monomial { a: 0, b: 0 } => {
            // mu is a probability measure.
            Ok(Complex64::new(1.0, 0.0))
        }
        TestFunction::Monomial { a, b } => {
            // Int z^a zbar^b dA = (1/(2i(b+1))) Oint z^a zbar^(b+1) dz
            //                   = pi * residue(h^a hbar(1/w)^(b+1) h') / (b+1)
            let h = curve.h_series();
            let hb = curve.hbar_inv_series();
            let mut f = h.derivative();
            for _ in 0..*a {
                f = f.mul(&h);
            }
            for _ in 0..=*b {
                f = f.mul(&hb);
            }
            let res = f
                .residue()
                .expect("exact Laurent polynomial has every coefficient");
            Ok(res / ((b + 1) as f64 * t0))
        }
        TestFunction::Bump { .. } => {
            // Real-valued radial profile: sweep the boundary in polar
            // coordinates about the bump center and integrate the radial
            // antiderivative along each ray.
            let prof = |z: Complex64| phi.eval(z).re;
            let value = polar_area_integral(curve, prof, 1e-10)?;
            Ok(Complex64::new(value / (PI * t0), 0.0))
        }
    }
}

/// Area integral of a smooth function over the curve interior: polar
/// coordinates about the centroid, Gauss-Legendre in radius, trapezoid in
/// angle with node doubling.
pub fn polar_area_integral<F: Fn(Complex64) -> f64>(
    curve: &PolynomialCurve,
    f: F,
    tol: f64,
) -> Result<f64, AnalysisError> {
    let center = curve.centroid();
    let (gl_x, gl_w) = gauss_legendre_64();
    let eval = |m: usize| -> f64 {
        let mut sum = 0.0;
        for k in 0..m {
            let phi = 2.0 * PI * k as f64 / m as f64;
            let w = Complex64::from_polar(1.0, phi);
            let zeta = curve.evaluate(w);
            let dzeta = curve.derivative_at(w) * Complex64::new(0.0, 1.0) * w;
            let ray = zeta - center;
            let rho = ray.norm();
            // d theta = Im[dzeta / (zeta - center)] dphi
            let dtheta = (dzeta / ray).im * (2.0 * PI / m as f64);
            // Gauss-Legendre on s in [0, rho] of f(center + s e^{i arg}) s ds
            let dir = ray / rho;
            let mut radial = 0.0;
            for (x, wgt) in gl_x.iter().zip(gl_w.iter()) {
                let s = 0.5 * rho * (x + 1.0);
                radial += wgt * f(center + dir * s) * s;
            }
            radial *= 0.5 * rho;
            sum += radial * dtheta;
        }
        sum
    };
    let mut m = 256usize;
    let mut prev = eval(m);
    loop {
        m *= 2;
        let cur = eval(m);
        if (cur - prev).abs() <= tol * cur.abs().max(1.0) {
            return Ok(cur);
        }
        if m >= 1 << 15 {
            return Ok(cur);
        }
        prev = cur;
    }
}

/// |empirical - predicted| / stderr with a floor on the stderr at the
/// double-precision noise level of the predicted value, so degenerate
/// observables (zero sampling variance) do not divide float round-off by
/// zero.
pub fn z_score(empirical: Complex64, predicted: Complex64, stderr: f64) -> f64 {
    let diff = (empirical - predicted).norm();
    if diff == 0.0 {
        return 0.0;
    }
    diff / stderr.max(1e-12 * predicted.norm().max(1.0))
}

/// One observable row of the weak-convergence report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableReport {
    pub label: String,
    pub empirical: [f64; 2],
    pub stderr: Option<f64>,
    pub predicted: [f64; 2],
    /// Finite-N resolution of the comparison: the predicted integral is
    /// the N -> infinity limit, while the gas carries O(1/N) edge
    /// corrections of size up to sup|phi| / N. Added in quadrature to the
    /// standard error when forming the z-score.
    pub finite_n_allowance: f64,
    /// |empirical - predicted| / sqrt(stderr^2 + allowance^2).
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakConvergenceReport {
    pub observables: Vec<ObservableReport>,
    pub max_abs_z: Option<f64>,
}

/// sup |phi| over the interior, estimated on the boundary polyline
/// (monomial moduli |z|^(a+b) peak there; the bump peaks at its center
/// with value 1).
fn sup_on_boundary(curve: &PolynomialCurve, phi: &TestFunction) -> f64 {
    match phi {
        TestFunction::Bump { .. } => 1.0,
        TestFunction::Monomial { .. } => {
            let mut sup: f64 = 0.0;
            for k in 0..256 {
                let w = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 256.0);
                sup = sup.max(phi.eval(curve.evaluate(w)).norm());
            }
            sup
        }
    }
}

/// Empirical means of (1/N) sum phi(z_i) against quadrature of
/// Int phi d mu for each test function, with z-scores.
pub fn weak_convergence_test(
    samples: &SampleSet,
    curve: &PolynomialCurve,
    t0: f64,
    fns: &[TestFunction],
) -> Result<WeakConvergenceReport, AnalysisError> {
    if samples.records.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let n = samples.n_particles() as f64;
    let chains = samples.chains() as usize;
    let mut observables = Vec::with_capacity(fns.len());
    let mut max_z: Option<f64> = None;
    for phi in fns {
        let mut chain_sums = vec![ZERO; chains];
        let mut chain_counts = vec![0u64; chains];
        for rec in &samples.records {
            let mut s = ZERO;
            for z in &rec.z {
                s += phi.eval(*z);
            }
            chain_sums[rec.chain as usize] += s / n;
            chain_counts[rec.chain as usize] += 1;
        }
        let means: Vec<Complex64> = chain_sums
            .iter()
            .zip(&chain_counts)
            .filter(|(_, c)| **c > 0)
            .map(|(s, c)| s / *c as f64)
            .collect();
        let m = means.len();
        let grand = means.iter().sum::<Complex64>() / m as f64;
        let stderr = if m >= 2 {
            let var: f64 =
                means.iter().map(|x| (x - grand).norm_sqr()).sum::<f64>() / (m as f64 - 1.0);
            Some((var / m as f64).sqrt())
        } else {
            None
        };
        let predicted = measure_integral(curve, phi, t0)?;
        let allowance = sup_on_boundary(curve, phi) / n;
        let z_score = stderr.map(|se| {
            z_score(grand, predicted, (se * se + allowance * allowance).sqrt())
        });
        if let Some(z) = z_score {
            max_z = Some(max_z.map_or(z, |m| m.max(z)));
        }
        observables.push(ObservableReport {
            label: phi.label(),
            empirical: [grand.re, grand.im],
            stderr,
            predicted: [predicted.re, predicted.im],
            finite_n_allowance: allowance,
            z_score,
        });
    }
    Ok(WeakConvergenceReport {
        observables,
        max_abs_z: max_z,
    })
}

/// 64-point Gauss-Legendre nodes and weights on [-1, 1], generated by
/// Newton iteration on the Legendre recurrence.
pub fn gauss_legendre_64() -> (Vec<f64>, Vec<f64>) {
    gauss_legendre(64)
}

pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0f64; n];
    let mut w = vec![0.0f64; n];
    for i in 0..n {
        // Chebyshev initial guess.
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, t);
            let dt = -p / dp;
            t += dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, t);
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    x.reverse();
    w.reverse();
    (x, w)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
