//! Inverse moment problem: recover the unique valid polynomial curve with
//! prescribed area and exterior harmonic moments, by Newton iteration on
//! the scaled parameters (rho, alpha) with geometric continuation in t0.

use crate::curve::{CurveError, MomentVector, PolynomialCurve};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error)]
pub enum SolveError {
    /// The tangent map degenerates at |t2| = 1/2 and the small-area theory
    /// needs |t2| < 1/2; larger values are rejected up front.
    #[error("inverse moment problem requires |t2| < 1/2, got |t2| = {0}")]
    HessianDegenerate(f64),
    #[error(
        "continuation stalled at t0 = {t0_reached:e} of {t0_target:e}: \
         outside small-area regime / near cusp"
    )]
    NoConvergence { t0_reached: f64, t0_target: f64 },
    #[error("converged parameters fail curve validity: outside small-area regime / near cusp")]
    InvalidCurve,
    #[error("potential has no unique non-degenerate minimum (disconnected-support regime)")]
    MultipleMinima,
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Newton/continuation controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Residual norm target for each Newton solve.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Number of geometric continuation steps in t0.
    pub continuation_steps: usize,
    /// The ramp starts at this fraction of the target t0.
    pub t0_start_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol: 1e-12,
            max_newton_iters: 40,
            continuation_steps: 8,
            t0_start_fraction: 1.0 / 256.0,
        }
    }
}

/// Scaled curve parameters: rho = r^2, alpha_j = r^-j a_j.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledParams {
    pub rho: f64,
    pub alpha: Vec<Complex64>,
}

impl ScaledParams {
    pub fn to_curve(&self) -> Result<PolynomialCurve, CurveError> {
        let r = self.rho.sqrt();
        let a = self
            .alpha
            .iter()
            .enumerate()
            .map(|(j, al)| al * r.powi(j as i32))
            .collect();
        PolynomialCurve::new(r, a)
    }

    pub fn from_curve(curve: &PolynomialCurve) -> Self {
        let r = curve.r();
        let alpha = curve
            .a()
            .iter()
            .enumerate()
            .map(|(j, a)| a / r.powi(j as i32))
            .collect();
        ScaledParams {
            rho: r * r,
            alpha,
        }
    }
}

/// Per-run diagnostics: Newton iterations for every continuation step
/// actually taken, the final residual norm, and the cusp margin of the
/// returned curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: Vec<u32>,
    pub residual: f64,
    pub cusp_margin: f64,
}

/// Distance of the curve from cusp formation: 1 - critical radius.
pub fn cusp_margin(curve: &PolynomialCurve) -> f64 {
    1.0 - curve.critical_radius()
}

/// Small-area initial guess: rho = t0, alpha_0 = 0,
/// alpha_j = (j+1) conj(t_{j+1}) for j >= 1.
pub fn initial_guess(t: &MomentVector) -> Result<ScaledParams, SolveError> {
    let t2 = t.t(2).norm();
    if t2 >= 0.5 {
        return Err(SolveError::HessianDegenerate(t2));
    }
    let n_alpha = t.jmax().max(1); // alpha_0 .. alpha_{jmax-1}
    let mut alpha = vec![ZERO; n_alpha];
    for (j, al) in alpha.iter_mut().enumerate().skip(1) {
        *al = (j as f64 + 1.0) * t.t(j + 1).conj();
    }
    Ok(ScaledParams {
        rho: t.t0(),
        alpha,
    })
}

struct NewtonSystem<'a> {
    target: DVector<f64>,
    jmax: usize,
    _t: &'a MomentVector,
}

impl NewtonSystem<'_> {
    fn dim(&self) -> usize {
        1 + 2 * self.jmax
    }

    fn params_to_vec(&self, p: &ScaledParams) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        x[0] = p.rho;
        for (j, al) in p.alpha.iter().enumerate() {
            x[1 + 2 * j] = al.re;
            x[2 + 2 * j] = al.im;
        }
        x
    }

    fn vec_to_params(&self, x: &DVector<f64>) -> ScaledParams {
        let mut alpha = Vec::with_capacity(self.jmax);
        for j in 0..self.jmax {
            alpha.push(Complex64::new(x[1 + 2 * j], x[2 + 2 * j]));
        }
        ScaledParams { rho: x[0], alpha }
    }

    /// Residual of the forward map against the target, as a real vector.
    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>, SolveError> {
        let p = self.vec_to_params(x);
        if !(p.rho > 0.0) {
            // Signal an unusable point; the line search keeps rho positive.
            return Err(SolveError::NoConvergence {
                t0_reached: p.rho,
                t0_target: self.target[0],
            });
        }
        let curve = p.to_curve()?;
        let t = curve.forward_moments()?;
        let mut out = DVector::zeros(self.dim());
        out[0] = t.t0() - self.target[0];
        for j in 1..=self.jmax {
            let tj = t.t(j);
            out[1 + 2 * (j - 1)] = tj.re - self.target[1 + 2 * (j - 1)];
            out[2 + 2 * (j - 1)] = tj.im - self.target[2 + 2 * (j - 1)];
        }
        Ok(out)
    }

    /// Jacobian by central finite differences; columns evaluate in
    /// parallel and assemble by index, so the result is identical to a
    /// serial evaluation.
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, SolveError> {
        let dim = self.dim();
        let cols: Result<Vec<DVector<f64>>, SolveError> = (0..dim)
            .into_par_iter()
            .map(|i| {
                let h = 1e-6 * x[i].abs().max(1e-3);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fp = self.residual(&xp)?;
                let fm = self.residual(&xm)?;
                Ok((fp - fm) / (2.0 * h))
            })
            .collect();
        let cols = cols?;
        let mut jac = DMatrix::zeros(dim, dim);
        for (i, col) in cols.iter().enumerate() {
            jac.set_column(i, col);
        }
        Ok(jac)
    }

    /// Damped Newton iteration from `x`; returns the solution and the
    /// iteration count.
    fn newton(
        &self,
        mut x: DVector<f64>,
        cfg: &SolverConfig,
    ) -> Result<(DVector<f64>, u32), SolveError> {
        let fail = |x0: f64| SolveError::NoConvergence {
            t0_reached: x0,
            t0_target: self.target[0],
        };
        let mut res = self.residual(&x)?;
        let mut norm = res.norm();
        for iter in 0..cfg.max_newton_iters {
            if norm <= cfg.newton_tol {
                return Ok((x, iter as u32));
            }
            let jac = self.jacobian(&x)?;
            let step = jac.lu().solve(&res).ok_or_else(|| fail(x[0]))?;
            let mut lambda = 1.0f64;
            let mut accepted = false;
            for _ in 0..30 {
                let xn = &x - &step * lambda;
                if xn[0] > 0.0 {
                    if let Ok(rn) = self.residual(&xn) {
                        let nn = rn.norm();
                        if nn < norm {
                            x = xn;
                            res = rn;
                            norm = nn;
                            accepted = true;
                            break;
                        }
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(fail(x[0]));
            }
        }
        if norm <= cfg.newton_tol {
            Ok((x, cfg.max_newton_iters as u32))
        } else {
            Err(fail(x[0]))
        }
    }
}

fn target_vector(t: &MomentVector, jmax: usize) -> DVector<f64> {
    let mut v = DVector::zeros(1 + 2 * jmax);
    v[0] = t.t0();
    for j in 1..=jmax {
        v[1 + 2 * (j - 1)] = t.t(j).re;
        v[2 + 2 * (j - 1)] = t.t(j).im;
    }
    v
}

/// Solve the inverse moment problem for the target (t0; t1..t_{n+1}).
/// Continuation ramps t0 geometrically from `t0_start_fraction * t0`,
/// bisecting stalled steps; the returned curve is the branch connected to
/// the small-area solution.
pub fn solve(
    t: &MomentVector,
    cfg: &SolverConfig,
) -> Result<(PolynomialCurve, SolveReport), SolveError> {
    let t2 = t.t(2).norm();
    if t2 >= 0.5 {
        return Err(SolveError::HessianDegenerate(t2));
    }
    let jmax = t.jmax().max(1);
    let t0_target = t.t0();
    let steps = cfg.continuation_steps.max(1);
    let start_t0 = t.t0() * cfg.t0_start_fraction.clamp(1e-6, 1.0);
    let ratio = (t0_target / start_t0).powf(1.0 / steps as f64);

    let mut iterations = Vec::new();
    // First rung of the ramp, seeded from the analytic small-area guess.
    let guess = initial_guess(&t.with_t0(start_t0)?)?;
    let sys = NewtonSystem {
        target: target_vector(&t.with_t0(start_t0)?, jmax),
        jmax,
        _t: t,
    };
    let x0 = sys.params_to_vec(&guess);
    let (mut x, iters) = sys.newton(x0, cfg)?;
    iterations.push(iters);
    let mut solved_t0 = start_t0;

    let mut bisections = 0usize;
    let mut next = (solved_t0 * ratio).min(t0_target);
    while solved_t0 < t0_target {
        let sys = NewtonSystem {
            target: target_vector(&t.with_t0(next)?, jmax),
            jmax,
            _t: t,
        };
        match sys.newton(x.clone(), cfg) {
            Ok((xn, iters)) => {
                iterations.push(iters);
                x = xn;
                solved_t0 = next;
                next = (solved_t0 * ratio).min(t0_target);
            }
            Err(_) => {
                // Retry a shorter rung: geometric midpoint toward the
                // stalled target. Exhausting the budget is the graceful
                // cusp-breakdown signal.
                bisections += 1;
                next = (solved_t0 * next).sqrt();
                if bisections > 12 || next / solved_t0 - 1.0 < 1e-9 {
                    return Err(SolveError::NoConvergence {
                        t0_reached: solved_t0,
                        t0_target,
                    });
                }
            }
        }
    }

    let final_sys = NewtonSystem {
        target: target_vector(t, jmax),
        jmax,
        _t: t,
    };
    let residual = final_sys.residual(&x)?.norm();
    let params = final_sys.vec_to_params(&x);
    let curve = params.to_curve()?;
    if !curve.is_simple_positively_oriented() {
        return Err(SolveError::InvalidCurve);
    }
    let report = SolveReport {
        iterations,
        residual,
        cusp_margin: cusp_margin(&curve),
    };
    Ok((curve, report))
}

/// Inverse problem with t1 != 0: shift the origin to the minimizer of
/// U(z) = |z|^2 - 2 Re sum t_k z^k, solve there, translate back.
pub fn solve_shifted(
    t: &MomentVector,
    cfg: &SolverConfig,
) -> Result<(PolynomialCurve, SolveReport), SolveError> {
    if t.t(1) == ZERO {
        return solve(t, cfg);
    }
    let z_star = potential_minimizer(t)?;
    let shifted = shift_moments(t, z_star)?;
    let (curve, report) = solve(&shifted, cfg)?;
    let curve = curve.translated(z_star)?;
    let report = SolveReport {
        cusp_margin: cusp_margin(&curve),
        ..report
    };
    Ok((curve, report))
}

/// Unique non-degenerate minimizer of U(z) = |z|^2 - 2 Re sum t_k z^k,
/// located by a grid scan plus Newton refinement. Multiple interior minima
/// signal the disconnected-support regime and are rejected.
pub fn potential_minimizer(t: &MomentVector) -> Result<Complex64, SolveError> {
    let p_deriv = |z: Complex64| -> Complex64 {
        let mut acc = ZERO;
        for j in (1..=t.jmax()).rev() {
            acc = acc * z + t.t(j) * j as f64;
        }
        acc
    };
    let p_second = |z: Complex64| -> Complex64 {
        let mut acc = ZERO;
        for j in (2..=t.jmax()).rev() {
            acc = acc * z + t.t(j) * (j * (j - 1)) as f64;
        }
        acc
    };
    let u = |z: Complex64| -> f64 {
        let mut p = ZERO;
        for j in (1..=t.jmax()).rev() {
            p = (p + t.t(j)) * z;
        }
        z.norm_sqr() - 2.0 * p.re
    };

    let moment_scale: f64 = (1..=t.jmax()).map(|j| j as f64 * t.t(j).norm()).sum();
    let scan = (2.0 * moment_scale).max(4.0 * t.t0().sqrt()).max(0.1);
    let m = 81usize;
    let mut values = vec![0.0f64; m * m];
    let at = |i: usize, j: usize| -> Complex64 {
        Complex64::new(
            -scan + 2.0 * scan * i as f64 / (m - 1) as f64,
            -scan + 2.0 * scan * j as f64 / (m - 1) as f64,
        )
    };
    for i in 0..m {
        for j in 0..m {
            values[i * m + j] = u(at(i, j));
        }
    }
    let mut minima: Vec<Complex64> = Vec::new();
    for i in 1..m - 1 {
        for j in 1..m - 1 {
            let v = values[i * m + j];
            let mut is_min = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let iv = ((i as i64 + di) as usize) * m + (j as i64 + dj) as usize;
                    if values[iv] < v {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if !is_min {
                continue;
            }
            // Newton refinement on the gradient.
            let mut z = at(i, j);
            let mut ok = false;
            for _ in 0..60 {
                let g = z - p_deriv(z).conj();
                if g.norm() <= 1e-13 * scan.max(1.0) {
                    ok = true;
                    break;
                }
                let pdd = p_second(z);
                // Hessian of U in real coordinates.
                let hxx = 2.0 - 2.0 * pdd.re;
                let hyy = 2.0 + 2.0 * pdd.re;
                let hxy = 2.0 * pdd.im;
                let det = hxx * hyy - hxy * hxy;
                if det.abs() < 1e-14 {
                    break;
                }
                let gx = 2.0 * g.re;
                let gy = 2.0 * g.im;
                let dx = (hyy * gx - hxy * gy) / det;
                let dy = (hxx * gy - hxy * gx) / det;
                z -= Complex64::new(dx, dy);
            }
            if !ok {
                continue;
            }
            // Keep non-degenerate minima only.
            let pdd = p_second(z);
            if pdd.norm() >= 1.0 - 1e-12 {
                continue;
            }
            if z.norm() > scan {
                continue;
            }
            if !minima.iter().any(|m| (m - z).norm() < 1e-7 * scan.max(1.0)) {
                minima.push(z);
            }
        }
    }
    match minima.len() {
        1 => Ok(minima[0]),
        _ => Err(SolveError::MultipleMinima),
    }
}

/// Moments of the potential re-expanded about z_star. The linear term
/// vanishes by construction of the minimizer and is set to exactly zero.
fn shift_moments(t: &MomentVector, z_star: Complex64) -> Result<MomentVector, SolveError> {
    let jmax = t.jmax();
    let mut shifted = vec![ZERO; jmax];
    for m in 2..=jmax {
        let mut cm = ZERO;
        for k in m..=jmax {
            cm += t.t(k) * binomial(k, m) * z_star.powi((k - m) as i32);
        }
        shifted[m - 1] = cm;
    }
    Ok(MomentVector::new(t.t0(), shifted)?)
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut out = 1.0f64;
    for i in 0..k.min(n - k) {
        out = out * (n - i) as f64 / (i + 1) as f64;
    }
    out
}
