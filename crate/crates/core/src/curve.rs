//! Polynomial curves h(w) = r w + a0 + a1 w^-1 + ... + an w^-n on |w| = 1:
//! forward harmonic-moment map, validity predicates, Schwarz function and
//! reflection, interior moments and point classification.

use crate::laurent::{LaurentError, LaurentSeries};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::sync::OnceLock;
use thiserror::Error;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Polyline resolution used for simplicity sweeps and point classification.
pub const CURVE_SAMPLES: usize = 4096;

/// Default boundary band for `contains`, relative to the curve diameter.
pub const DEFAULT_BAND_REL: f64 = 1e-9;

#[derive(Debug, Error, Clone)]
pub enum CurveError {
    #[error("leading coefficient r must be positive and finite, got {0}")]
    NonPositiveLeading(f64),
    #[error("curve coefficients must be finite")]
    NonFiniteCoefficient,
    #[error("area coefficient t0 must be positive and finite, got {0}")]
    NonPositiveArea(f64),
    #[error("moment coefficients must be finite")]
    NonFiniteMoment,
    #[error(transparent)]
    Laurent(#[from] LaurentError),
    #[error("inversion of h at z = {z} did not converge to the reflection annulus")]
    Inversion { z: Complex64 },
    #[error("contour quadrature did not converge below {tol:e} (last change {change:e})")]
    QuadratureNotConverged { tol: f64, change: f64 },
    #[error("interior moment v_{k} disagrees between residue and quadrature routes by {delta:e}")]
    InteriorMomentMismatch { k: usize, delta: f64 },
}

/// Classification of a point against the curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Outside,
    Boundary,
}

/// Exterior harmonic moments (t1..t_{n+1}) together with t0 = area / pi.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    t0: f64,
    t: Vec<Complex64>,
}

impl MomentVector {
    pub fn new(t0: f64, t: Vec<Complex64>) -> Result<Self, CurveError> {
        if !(t0 > 0.0) || !t0.is_finite() {
            return Err(CurveError::NonPositiveArea(t0));
        }
        if t.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(CurveError::NonFiniteMoment);
        }
        let mut t = t;
        while t.last().is_some_and(|c| *c == ZERO) {
            t.pop();
        }
        Ok(MomentVector { t0, t })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// t_j for j >= 1; zero beyond the stored range.
    pub fn t(&self, j: usize) -> Complex64 {
        assert!(j >= 1, "exterior moments are indexed from 1");
        self.t.get(j - 1).copied().unwrap_or(ZERO)
    }

    pub fn t_slice(&self) -> &[Complex64] {
        &self.t
    }

    /// Highest index with a (possibly) nonzero moment.
    pub fn jmax(&self) -> usize {
        self.t.len()
    }

    pub fn with_t0(&self, t0: f64) -> Result<Self, CurveError> {
        Self::new(t0, self.t.clone())
    }
}

/// A curve parametrized by h(w) = r w + sum_j a_j w^-j on the unit circle.
#[derive(Debug)]
pub struct PolynomialCurve {
    r: f64,
    a: Vec<Complex64>,
    critical_radius: f64,
    geometry: OnceLock<Geometry>,
    simple: OnceLock<bool>,
}

impl Clone for PolynomialCurve {
    fn clone(&self) -> Self {
        PolynomialCurve {
            r: self.r,
            a: self.a.clone(),
            critical_radius: self.critical_radius,
            geometry: OnceLock::new(),
            simple: OnceLock::new(),
        }
    }
}

impl PolynomialCurve {
    /// Build a curve from r > 0 and trailing coefficients a0..an. Trailing
    /// zero coefficients are trimmed so that a_n != 0 unless the degree is 0.
    pub fn new(r: f64, a: Vec<Complex64>) -> Result<Self, CurveError> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(CurveError::NonPositiveLeading(r));
        }
        if a.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(CurveError::NonFiniteCoefficient);
        }
        let mut a = a;
        while a.last().is_some_and(|c| *c == ZERO) {
            a.pop();
        }
        let critical_radius = critical_radius_of(r, &a);
        Ok(PolynomialCurve {
            r,
            a,
            critical_radius,
            geometry: OnceLock::new(),
            simple: OnceLock::new(),
        })
    }

    /// The circle of radius r around the origin.
    pub fn circle(r: f64) -> Result<Self, CurveError> {
        Self::new(r, Vec::new())
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn a(&self) -> &[Complex64] {
        &self.a
    }

    /// a_j, zero beyond the stored range.
    pub fn a_coeff(&self, j: usize) -> Complex64 {
        self.a.get(j).copied().unwrap_or(ZERO)
    }

    pub fn degree(&self) -> usize {
        self.a.len().saturating_sub(1)
    }

    /// h(w). Panics at w = 0 where the parametrization has a pole.
    pub fn evaluate(&self, w: Complex64) -> Complex64 {
        assert!(w.norm_sqr() > 0.0, "h(w) is undefined at w = 0");
        let mut acc = ZERO;
        for a in self.a.iter().rev() {
            acc = acc / w + a;
        }
        self.r * w + acc
    }

    /// h'(w).
    pub fn derivative_at(&self, w: Complex64) -> Complex64 {
        let mut acc = ZERO;
        for (j, a) in self.a.iter().enumerate().skip(1).rev() {
            acc = acc / w + a * (j as f64);
        }
        Complex64::new(self.r, 0.0) - acc / (w * w)
    }

    /// h-bar(v): h with conjugated coefficients.
    pub fn evaluate_conj(&self, v: Complex64) -> Complex64 {
        self.evaluate(v.conj()).conj()
    }

    /// h as an exact Laurent series (exponents -n..=1).
    pub fn h_series(&self) -> LaurentSeries {
        let len = self.a.len() as i64;
        let lo = -len;
        let mut coeffs = vec![ZERO; (2 + len) as usize];
        for (j, a) in self.a.iter().enumerate() {
            coeffs[(len - j as i64) as usize] = *a; // exponent -j
        }
        let top = coeffs.len() - 1;
        coeffs[top] = Complex64::new(self.r, 0.0); // exponent 1
        LaurentSeries::from_coeffs(lo, coeffs)
    }

    /// h-bar(1/w) as an exact Laurent series (exponents -1..=n).
    pub fn hbar_inv_series(&self) -> LaurentSeries {
        self.h_series().conj_coeffs().reverse()
    }

    /// Largest modulus of a zero of h'; zero for the pure circle. This is
    /// the radius below which the exterior parametrization stays immersive.
    pub fn critical_radius(&self) -> f64 {
        self.critical_radius
    }

    /// Scale of the curve: r + sum |a_j|.
    pub fn coefficient_scale(&self) -> f64 {
        self.r + self.a.iter().map(|c| c.norm()).sum::<f64>()
    }

    fn geometry(&self) -> &Geometry {
        self.geometry.get_or_init(|| Geometry::build(self, CURVE_SAMPLES))
    }

    /// True iff the parametrized curve is simple and positively oriented:
    /// critical radius below 1, tangent winding +1 and no polyline
    /// self-intersection at the default sampling.
    pub fn is_simple_positively_oriented(&self) -> bool {
        *self.simple.get_or_init(|| {
            if !(self.critical_radius < 1.0) {
                return false;
            }
            let geo = self.geometry();
            if geo.tangent_winding != 1 {
                return false;
            }
            !geo.self_intersects()
        })
    }

    /// Winding number of the curve around the origin equals one.
    pub fn encloses_origin(&self) -> bool {
        self.geometry().winding(ZERO) == 1
    }

    /// Winding number of the sampled polyline around z.
    pub fn winding(&self, z: Complex64) -> i64 {
        self.geometry().winding(z)
    }

    /// Classify z against the curve with the default boundary band.
    pub fn contains(&self, z: Complex64) -> Containment {
        let band = DEFAULT_BAND_REL * self.geometry().diameter;
        self.contains_with_band(z, band)
    }

    /// Classify z against the curve; points within `band` of the sampled
    /// polyline are reported as boundary.
    pub fn contains_with_band(&self, z: Complex64, band: f64) -> Containment {
        let geo = self.geometry();
        let d = (z - geo.center).norm();
        if d < geo.rmin - band {
            return Containment::Inside;
        }
        if d > geo.rmax + band {
            return Containment::Outside;
        }
        if geo.distance(z) <= band {
            return Containment::Boundary;
        }
        if geo.winding(z) != 0 {
            Containment::Inside
        } else {
            Containment::Outside
        }
    }

    /// Area centroid of the interior domain.
    pub fn centroid(&self) -> Complex64 {
        let t0 = self.forward_moment_t0();
        let v1 = self.interior_moment_residue(1);
        v1 / t0
    }

    /// Curve diameter estimated from the sampled polyline.
    pub fn diameter(&self) -> f64 {
        self.geometry().diameter
    }

    fn forward_moment_t0(&self) -> f64 {
        let sum: f64 = self
            .a
            .iter()
            .enumerate()
            .map(|(j, a)| j as f64 * a.norm_sqr())
            .sum();
        self.r * self.r - sum
    }

    /// Series h-bar(1/w) h'(w), the moment integrand without the h^-j factor.
    fn moment_prefactor(&self) -> LaurentSeries {
        let h = self.h_series();
        self.hbar_inv_series().mul(&h.derivative())
    }

    /// Exterior harmonic moment t_j by residue extraction at infinity.
    /// j = 0 returns t0. Defined for any r > 0 through the polynomial
    /// formulas, whether or not the curve encloses the origin.
    pub fn forward_moment(&self, j: usize) -> Result<Complex64, CurveError> {
        if j == 0 {
            return Ok(Complex64::new(self.forward_moment_t0(), 0.0));
        }
        let n = self.degree() as i64;
        let order = (n + 1 + j as i64) + 4 * (n + 2);
        let f = self.moment_prefactor();
        let hmj = self.h_series().inv_power(j as u32, order)?;
        let res = f.mul(&hmj).residue()?;
        Ok(res / j as f64)
    }

    /// All exterior moments (t0; t1..t_{n+1}) by residue extraction.
    pub fn forward_moments(&self) -> Result<MomentVector, CurveError> {
        let n = self.degree() as i64;
        let jmax = (n + 1) as usize;
        let order = (n + 2 + jmax as i64) + 4 * (n + 2);
        let f = self.moment_prefactor();
        let hm1 = self.h_series().inv_power(1, order)?;
        let mut hmj = hm1.clone();
        let mut t = Vec::with_capacity(jmax);
        for j in 1..=jmax {
            if j > 1 {
                hmj = hmj.mul(&hm1);
            }
            let res = f.mul(&hmj).residue()?;
            t.push(res / j as f64);
        }
        MomentVector::new(self.forward_moment_t0(), t)
    }

    /// Independent oracle for `forward_moment`: trapezoidal contour
    /// quadrature of h-bar(1/w) h'(w) h(w)^-j on |w| = radius, with node
    /// doubling until the change drops below `tol`.
    pub fn forward_moments_quadrature(
        &self,
        j: usize,
        radius: f64,
        tol: f64,
    ) -> Result<Complex64, CurveError> {
        assert!(radius >= 1.0, "quadrature contour must lie in |w| >= 1");
        let f = |w: Complex64| -> Complex64 {
            let hw = self.evaluate(w);
            let base = self.evaluate_conj(1.0 / w) * self.derivative_at(w);
            base * hw.powi(-(j as i32))
        };
        let integral = adaptive_circle_quadrature(f, radius, tol)?;
        if j == 0 {
            Ok(integral)
        } else {
            Ok(integral / j as f64)
        }
    }

    /// Newton inversion of h: find w with h(w) = z inside the reflection
    /// annulus R < |w| < 1/R.
    pub fn invert(&self, z: Complex64) -> Result<Complex64, CurveError> {
        let scale = self.coefficient_scale().max(z.norm());
        let tol = 1e-13 * scale.max(1e-300);
        let seed = z / self.r;
        if let Some(w) = self.newton_root(z, seed, tol) {
            if self.in_reflection_annulus(w) {
                return Ok(w);
            }
        }
        // Far-field seeding failed; sweep seeds on circles bracketing the
        // unit circle from both sides of the annulus.
        let big_r = self.critical_radius;
        let outer = if big_r > 1e-12 { (1.0 + 1.0 / big_r) / 2.0 } else { 2.0 };
        let inner = (1.0 + big_r) / 2.0;
        for radius in [outer, inner, 1.0] {
            for k in 0..64 {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
                let seed = Complex64::from_polar(radius, phi);
                if let Some(w) = self.newton_root(z, seed, tol) {
                    if self.in_reflection_annulus(w) {
                        return Ok(w);
                    }
                }
            }
        }
        Err(CurveError::Inversion { z })
    }

    fn in_reflection_annulus(&self, w: Complex64) -> bool {
        let big_r = self.critical_radius;
        let m = w.norm();
        if big_r <= 0.0 {
            return m > 0.0;
        }
        m > big_r && m * big_r < 1.0
    }

    fn newton_root(&self, z: Complex64, seed: Complex64, tol: f64) -> Option<Complex64> {
        let mut w = seed;
        for _ in 0..80 {
            if w.norm_sqr() == 0.0 {
                return None;
            }
            let f = self.evaluate(w) - z;
            if f.norm() <= tol {
                return Some(w);
            }
            let d = self.derivative_at(w);
            if d.norm_sqr() == 0.0 {
                return None;
            }
            let step = f / d;
            w -= step;
            if !w.re.is_finite() || !w.im.is_finite() {
                return None;
            }
        }
        if (self.evaluate(w) - z).norm() <= tol {
            Some(w)
        } else {
            None
        }
    }

    /// Schwarz function S(z) = h-bar(1 / h^-1(z)), the analytic
    /// continuation of z-bar off the curve.
    pub fn schwarz(&self, z: Complex64) -> Result<Complex64, CurveError> {
        let w = self.invert(z)?;
        Ok(self.evaluate_conj(1.0 / w))
    }

    /// Schwarz reflection rho(z), the anti-holomorphic involution fixing
    /// the curve.
    pub fn reflection(&self, z: Complex64) -> Result<Complex64, CurveError> {
        Ok(self.schwarz(z)?.conj())
    }

    /// Interior moment v_k by residue extraction: the coefficient of w^-1
    /// in h-bar(1/w) h'(w) h(w)^k, an exact Laurent polynomial.
    pub fn interior_moment_residue(&self, k: usize) -> Complex64 {
        let f = self.moment_prefactor();
        let mut hk = LaurentSeries::one();
        let h = self.h_series();
        for _ in 0..k {
            hk = hk.mul(&h);
        }
        f.mul(&hk)
            .residue()
            .expect("product of exact series has every coefficient")
    }

    /// Interior moments v_0..v_kmax, computed by residue extraction and
    /// cross-checked against Green's-theorem contour quadrature of z^k.
    pub fn interior_moments(&self, kmax: usize, tol: f64) -> Result<Vec<Complex64>, CurveError> {
        let mut out = Vec::with_capacity(kmax + 1);
        for k in 0..=kmax {
            let va = self.interior_moment_residue(k);
            let f = |w: Complex64| -> Complex64 {
                self.evaluate(w).powi(k as i32)
                    * self.evaluate_conj(1.0 / w)
                    * self.derivative_at(w)
            };
            let vb = adaptive_circle_quadrature(f, 1.0, tol * 0.1)?;
            let delta = (va - vb).norm();
            if delta > tol * va.norm().max(1.0) {
                return Err(CurveError::InteriorMomentMismatch { k, delta });
            }
            out.push(va);
        }
        Ok(out)
    }

    /// Shifted copy: h(w) + delta (translates the curve).
    pub fn translated(&self, delta: Complex64) -> Result<Self, CurveError> {
        let mut a = self.a.clone();
        if a.is_empty() {
            a.push(ZERO);
        }
        a[0] += delta;
        Self::new(self.r, a)
    }
}

fn critical_radius_of(r: f64, a: &[Complex64]) -> f64 {
    let n = a.len().saturating_sub(1);
    if a.len() <= 1 {
        // h' = r is never zero.
        return 0.0;
    }
    // w^(n+1) h'(w) = r w^(n+1) - sum_{j>=1} j a_j w^(n-j), degree n+1.
    let deg = n + 1;
    let mut coeffs = vec![ZERO; deg + 1];
    coeffs[deg] = Complex64::new(r, 0.0);
    for (j, aj) in a.iter().enumerate().skip(1) {
        coeffs[n - j] = -(j as f64) * aj;
    }
    match polynomial_roots(&coeffs) {
        Some(roots) => roots.iter().map(|z| z.norm()).fold(0.0, f64::max),
        None => f64::INFINITY,
    }
}

/// Roots of a complex polynomial via companion-matrix eigenvalues.
/// `coeffs[k]` is the coefficient of w^k; the leading one must be nonzero.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Option<Vec<Complex64>> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    if lead == ZERO {
        return None;
    }
    if deg == 0 {
        return Some(Vec::new());
    }
    let mut m = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let eig = m.eigenvalues()?;
    Some(eig.iter().copied().collect())
}

/// Trapezoidal quadrature of (1/2 pi i) * contour integral of f on
/// |w| = radius, doubling node counts until the result stabilizes.
pub fn adaptive_circle_quadrature<F: Fn(Complex64) -> Complex64>(
    f: F,
    radius: f64,
    tol: f64,
) -> Result<Complex64, CurveError> {
    let mut nodes = 64usize;
    let mut prev = circle_quadrature(&f, radius, nodes);
    loop {
        nodes *= 2;
        let cur = circle_quadrature(&f, radius, nodes);
        let change = (cur - prev).norm();
        if change <= tol * cur.norm().max(1.0) {
            return Ok(cur);
        }
        if nodes >= 1 << 17 {
            return Err(CurveError::QuadratureNotConverged { tol, change });
        }
        prev = cur;
    }
}

fn circle_quadrature<F: Fn(Complex64) -> Complex64>(f: &F, radius: f64, nodes: usize) -> Complex64 {
    // (1/2 pi i) \oint f dw = (1/n) sum f(w_k) w_k on w_k = radius e^{i th_k}
    let mut sum = ZERO;
    for k in 0..nodes {
        let th = 2.0 * std::f64::consts::PI * k as f64 / nodes as f64;
        let w = Complex64::from_polar(radius, th);
        sum += f(w) * w;
    }
    sum / nodes as f64
}

/// Sampled polyline of the curve with cached search data.
struct Geometry {
    samples: Vec<Complex64>,
    center: Complex64,
    rmin: f64,
    rmax: f64,
    diameter: f64,
    tangent_winding: i64,
}

impl std::fmt::Debug for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Geometry")
            .field("samples", &self.samples.len())
            .field("diameter", &self.diameter)
            .finish()
    }
}

impl Geometry {
    fn build(curve: &PolynomialCurve, m: usize) -> Self {
        let mut samples = Vec::with_capacity(m);
        let mut tangent_prev: Option<Complex64> = None;
        let mut tangent_total = 0.0;
        for k in 0..m {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            let w = Complex64::from_polar(1.0, phi);
            samples.push(curve.evaluate(w));
            let t = Complex64::new(0.0, 1.0) * w * curve.derivative_at(w);
            if let Some(p) = tangent_prev {
                tangent_total += (t / p).arg();
            }
            tangent_prev = Some(t);
        }
        // close the tangent loop
        if let Some(p) = tangent_prev {
            let w = Complex64::new(1.0, 0.0);
            let t0 = Complex64::new(0.0, 1.0) * w * curve.derivative_at(w);
            tangent_total += (t0 / p).arg();
        }
        let tangent_winding = (tangent_total / (2.0 * std::f64::consts::PI)).round() as i64;

        let center = samples.iter().sum::<Complex64>() / m as f64;
        let mut rmin = f64::INFINITY;
        let mut rmax: f64 = 0.0;
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for z in &samples {
            let d = (z - center).norm();
            rmin = rmin.min(d);
            rmax = rmax.max(d);
            x0 = x0.min(z.re);
            x1 = x1.max(z.re);
            y0 = y0.min(z.im);
            y1 = y1.max(z.im);
        }
        let diameter = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
        Geometry {
            samples,
            center,
            rmin,
            rmax,
            diameter,
            tangent_winding,
        }
    }

    /// Winding number of the closed polyline around z (crossing count).
    fn winding(&self, z: Complex64) -> i64 {
        let m = self.samples.len();
        let mut winding = 0i64;
        for i in 0..m {
            let p = self.samples[i];
            let q = self.samples[(i + 1) % m];
            if p.im <= z.im {
                if q.im > z.im && cross(q - p, z - p) > 0.0 {
                    winding += 1;
                }
            } else if q.im <= z.im && cross(q - p, z - p) < 0.0 {
                winding -= 1;
            }
        }
        winding
    }

    /// Distance from z to the sampled polyline.
    fn distance(&self, z: Complex64) -> f64 {
        let m = self.samples.len();
        let mut best = f64::INFINITY;
        for i in 0..m {
            let p = self.samples[i];
            let q = self.samples[(i + 1) % m];
            best = best.min(segment_distance(z, p, q));
        }
        best
    }

    /// Segment-intersection sweep over the polyline with grid hashing.
    fn self_intersects(&self) -> bool {
        let m = self.samples.len();
        let mut max_len: f64 = 0.0;
        for i in 0..m {
            let p = self.samples[i];
            let q = self.samples[(i + 1) % m];
            max_len = max_len.max((q - p).norm());
        }
        if max_len == 0.0 {
            return false;
        }
        let cell = max_len * 1.5;
        let key = |z: Complex64| ((z.re / cell).floor() as i64, (z.im / cell).floor() as i64);
        let mut grid: std::collections::HashMap<(i64, i64), Vec<usize>> =
            std::collections::HashMap::new();
        for i in 0..m {
            let p = self.samples[i];
            let q = self.samples[(i + 1) % m];
            let (ax, ay) = key(p);
            let (bx, by) = key(q);
            for gx in ax.min(bx)..=ax.max(bx) {
                for gy in ay.min(by)..=ay.max(by) {
                    grid.entry((gx, gy)).or_default().push(i);
                }
            }
        }
        for bucket in grid.values() {
            for (u, &i) in bucket.iter().enumerate() {
                for &j in bucket.iter().skip(u + 1) {
                    let (i, j) = (i.min(j), i.max(j));
                    if j == i + 1 || (i == 0 && j == m - 1) || i == j {
                        continue;
                    }
                    let a = self.samples[i];
                    let b = self.samples[(i + 1) % m];
                    let c = self.samples[j];
                    let d = self.samples[(j + 1) % m];
                    if segments_intersect(a, b, c, d) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segment_distance(z: Complex64, p: Complex64, q: Complex64) -> f64 {
    let d = q - p;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (z - p).norm();
    }
    let t = ((z - p).re * d.re + (z - p).im * d.im) / l2;
    let t = t.clamp(0.0, 1.0);
    (z - (p + d * t)).norm()
}

fn segments_intersect(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    // Collinear touching counts as an intersection for non-adjacent segments.
    let on = |p: Complex64, q: Complex64, x: Complex64| -> bool {
        cross(q - p, x - p) == 0.0
            && x.re >= p.re.min(q.re)
            && x.re <= p.re.max(q.re)
            && x.im >= p.im.min(q.im)
            && x.im <= p.im.max(q.im)
    };
    on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b)
}

// JSON form: { "r": real, "a": [[re, im], ...] }
impl Serialize for PolynomialCurve {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            r: f64,
            a: Vec<[f64; 2]>,
            #[serde(skip)]
            _p: std::marker::PhantomData<&'a ()>,
        }
        Repr {
            r: self.r,
            a: self.a.iter().map(|c| [c.re, c.im]).collect(),
            _p: std::marker::PhantomData,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PolynomialCurve {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            r: f64,
            a: Vec<[f64; 2]>,
        }
        let repr = Repr::deserialize(deserializer)?;
        let a = repr.a.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        PolynomialCurve::new(repr.r, a).map_err(D::Error::custom)
    }
}

// JSON form: { "t0": real, "t": [[re, im], ...] }
impl Serialize for MomentVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            t0: f64,
            t: Vec<[f64; 2]>,
        }
        Repr {
            t0: self.t0,
            t: self.t.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MomentVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            t0: f64,
            t: Vec<[f64; 2]>,
        }
        let repr = Repr::deserialize(deserializer)?;
        let t = repr.t.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        MomentVector::new(repr.t0, t).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn re(x: f64) -> Complex64 {
        c(x, 0.0)
    }

    #[test]
    fn evaluate_basics() {
        let circle = PolynomialCurve::circle(1.0).unwrap();
        assert!((circle.evaluate(c(0.0, 1.0)) - c(0.0, 1.0)).norm() < 1e-15);

        let ellipse = PolynomialCurve::new(1.0, vec![ZERO, re(0.5)]).unwrap();
        assert!((ellipse.evaluate(re(1.0)) - re(1.5)).norm() < 1e-15);

        let cubic = PolynomialCurve::new(0.5, vec![ZERO, ZERO, re(0.075)]).unwrap();
        assert!((cubic.evaluate(re(-1.0)) - re(-0.425)).norm() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "undefined at w = 0")]
    fn evaluate_rejects_origin() {
        let circle = PolynomialCurve::circle(1.0).unwrap();
        circle.evaluate(ZERO);
    }

    #[test]
    fn critical_radius_cases() {
        let circle = PolynomialCurve::circle(1.0).unwrap();
        assert_eq!(circle.critical_radius(), 0.0);

        // a1 = 2 t2 r with t2 = 0.25 -> R = sqrt(0.5)
        let r = 0.7;
        let ellipse = PolynomialCurve::new(r, vec![ZERO, re(2.0 * 0.25 * r)]).unwrap();
        assert!((ellipse.critical_radius() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn critical_radius_small_area_limit() {
        // a_j = r^j alpha_j with alpha_1 fixed: R -> sqrt(|alpha_1|) as r -> 0
        let alpha1 = c(0.3, 0.1);
        let alpha2 = c(0.05, -0.02);
        for r in [1e-2, 1e-3] {
            let curve =
                PolynomialCurve::new(r, vec![ZERO, alpha1 * r, alpha2 * r * r]).unwrap();
            let err = (curve.critical_radius() - alpha1.norm().sqrt()).abs();
            assert!(err < 3.0 * r, "r = {r}: err = {err}");
        }
    }

    #[test]
    fn simplicity_and_orientation() {
        let circle = PolynomialCurve::circle(1.0).unwrap();
        assert!(circle.is_simple_positively_oriented());

        let ellipse = PolynomialCurve::new(1.0, vec![ZERO, re(0.4)]).unwrap();
        assert!(ellipse.is_simple_positively_oriented());

        // single-t3 family past the embedding bound: r < 2 |a_2|
        let bad = PolynomialCurve::new(0.1, vec![ZERO, ZERO, re(0.075)]).unwrap();
        assert!(!bad.is_simple_positively_oriented());
    }

    #[test]
    fn origin_enclosure() {
        let circle = PolynomialCurve::circle(1.0).unwrap();
        assert!(circle.encloses_origin());

        let shifted = PolynomialCurve::new(1.0, vec![re(2.0)]).unwrap();
        assert!(shifted.is_simple_positively_oriented());
        assert!(!shifted.encloses_origin());

        // ellipse translated to t1-bar with |t1|^2 < t0 (1/2 - |t2|)
        let r = 0.2309401076758503;
        let ellipse =
            PolynomialCurve::new(r, vec![re(0.05), re(2.0 * 0.25 * r)]).unwrap();
        assert!(ellipse.encloses_origin());
    }

    #[test]
    fn forward_moments_known_cases() {
        // r = 1, a1 = 0.2: t0 = 0.96, t1 = 0, t2 = 0.1
        let curve = PolynomialCurve::new(1.0, vec![ZERO, re(0.2)]).unwrap();
        let t = curve.forward_moments().unwrap();
        assert!((t.t0() - 0.96).abs() < 1e-14);
        assert!(t.t(1).norm() < 1e-14);
        assert!((t.t(2) - re(0.1)).norm() < 1e-14);

        // r = 1, a0 = 0.1: t1 = 0.1, t0 = 1
        let curve = PolynomialCurve::new(1.0, vec![re(0.1)]).unwrap();
        let t = curve.forward_moments().unwrap();
        assert!((t.t0() - 1.0).abs() < 1e-14);
        assert!((t.t(1) - re(0.1)).norm() < 1e-14);

        // r = 0.5, a2 = 0.075: t3 = 0.1, t0 = 0.23875
        let curve = PolynomialCurve::new(0.5, vec![ZERO, ZERO, re(0.075)]).unwrap();
        let t = curve.forward_moments().unwrap();
        assert!((t.t0() - 0.23875).abs() < 1e-14);
        assert!((t.t(3) - re(0.1)).norm() < 1e-13);
    }

    #[test]
    fn quadrature_oracle_cases() {
        let circle = PolynomialCurve::circle(1.0).unwrap();
        let t1 = circle.forward_moments_quadrature(1, 1.0, 1e-13).unwrap();
        assert!(t1.norm() < 1e-12);

        let ellipse = PolynomialCurve::new(1.0, vec![ZERO, re(0.2)]).unwrap();
        let t2 = ellipse.forward_moments_quadrature(2, 1.0, 1e-12).unwrap();
        assert!((t2 - re(0.1)).norm() < 1e-10);

        // moments vanish beyond n + 1
        let t3 = ellipse.forward_moments_quadrature(3, 1.0, 1e-12).unwrap();
        assert!(t3.norm() < 1e-10);
    }

    #[test]
    fn schwarz_on_curve_and_circle() {
        let ellipse = PolynomialCurve::new(1.0, vec![ZERO, re(0.2)]).unwrap();
        for k in 0..8 {
            let w = Complex64::from_polar(1.0, 0.7 * k as f64);
            let z = ellipse.evaluate(w);
            let s = ellipse.schwarz(z).unwrap();
            assert!((s - z.conj()).norm() < 1e-10, "k = {k}");
        }

        let circle = PolynomialCurve::circle(0.5).unwrap();
        let s = circle.schwarz(re(1.0)).unwrap();
        assert!((s - re(0.25)).norm() < 1e-12); // r^2 / z

        // real crossing point of the ellipse maps to itself
        let z = ellipse.evaluate(re(1.0));
        let s = ellipse.schwarz(z).unwrap();
        assert!((s - z).norm() < 1e-12);
    }

    #[test]
    fn reflection_is_an_involution() {
        let ellipse = PolynomialCurve::new(0.8, vec![re(0.05), c(0.2, 0.1)]).unwrap();
        for k in 0..8 {
            let w = Complex64::from_polar(1.15, 0.8 * k as f64);
            let z = ellipse.evaluate(w);
            let rz = ellipse.reflection(z).unwrap();
            let rrz = ellipse.reflection(rz).unwrap();
            assert!((rrz - z).norm() < 1e-8, "k = {k}: {} vs {z}", rrz);
        }
        // fixed on the curve itself
        let z = ellipse.evaluate(Complex64::from_polar(1.0, 0.3));
        assert!((ellipse.reflection(z).unwrap() - z).norm() < 1e-10);
    }

    #[test]
    fn interior_moments_cases() {
        let circle = PolynomialCurve::circle(0.7).unwrap();
        let v = circle.interior_moments(3, 1e-9).unwrap();
        assert!((v[0] - re(0.49)).norm() < 1e-12);
        for k in 1..=3 {
            assert!(v[k].norm() < 1e-12);
        }

        let ellipse = PolynomialCurve::new(1.0, vec![ZERO, re(0.5)]).unwrap();
        let t0 = ellipse.forward_moments().unwrap().t0();
        let v = ellipse.interior_moments(2, 1e-9).unwrap();
        assert!((v[0] - re(t0)).norm() < 1e-12);
        // closed form for the ellipse: v2 = r^4 t2 (2 - 8 |t2|^2)
        let t2 = 0.25;
        let v2 = t2 * (2.0 - 8.0 * t2 * t2);
        assert!((v[2] - re(v2)).norm() < 1e-10);
    }

    #[test]
    fn contains_classification() {
        let ellipse = PolynomialCurve::new(1.0, vec![ZERO, re(0.3)]).unwrap();
        assert_eq!(ellipse.contains(ZERO), Containment::Inside);
        assert_eq!(ellipse.contains(ellipse.evaluate(re(2.0))), Containment::Outside);
        assert_eq!(ellipse.contains(ellipse.evaluate(re(1.0))), Containment::Boundary);
    }

    #[test]
    fn serde_roundtrip() {
        let curve = PolynomialCurve::new(0.5, vec![c(0.01, -0.02), c(0.2, 0.1)]).unwrap();
        let json = serde_json::to_string(&curve).unwrap();
        let back: PolynomialCurve = serde_json::from_str(&json).unwrap();
        assert_eq!(back.r(), curve.r());
        assert_eq!(back.a(), curve.a());

        let t = MomentVector::new(0.04, vec![ZERO, re(0.25)]).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"t0":0.04,"t":[[0.0,0.0],[0.25,0.0]]}"#);
        let back: MomentVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
