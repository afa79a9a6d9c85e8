//! Truncated two-sided Laurent series over complex coefficients.
//!
//! A series stores coefficients for exponents `lo..=hi`. Exponents above
//! `hi` are exactly zero. Exponents below `lo` are either exactly zero
//! (an *exact* series, i.e. a Laurent polynomial) or *discarded* by
//! truncation, in which case the series carries its truncation order and
//! every arithmetic result carries the tightest provably-correct window.
//! Residue extraction fails hard when the requested coefficient lies
//! below the window instead of silently returning garbage.

use num_complex::Complex64;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LaurentError {
    /// The leading (highest-exponent) coefficient vanishes, so the series
    /// has no inverse as an expansion around infinity.
    #[error("series is not invertible around infinity (zero leading coefficient)")]
    NonInvertible,
    /// The coefficient of w^-1 lies below the truncation window.
    #[error("residue outside the valid window (window starts at exponent {lo})")]
    ResidueOutsideWindow { lo: i64 },
}

/// A truncated Laurent series sum_k c_k w^k.
#[derive(Debug, Clone)]
pub struct LaurentSeries {
    /// Exponent of `coeffs[0]`.
    start: i64,
    coeffs: Vec<Complex64>,
    /// `None`: exact (all exponents below `start` are zero).
    /// `Some(l)`: exponents below `l` were discarded and are unknown.
    trunc: Option<i64>,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl LaurentSeries {
    /// The zero series (exact).
    pub fn zero() -> Self {
        LaurentSeries {
            start: 0,
            coeffs: Vec::new(),
            trunc: None,
        }
    }

    /// The constant series 1 (exact).
    pub fn one() -> Self {
        Self::monomial(0, Complex64::new(1.0, 0.0))
    }

    /// The single term c * w^k (exact).
    pub fn monomial(k: i64, c: Complex64) -> Self {
        LaurentSeries {
            start: k,
            coeffs: vec![c],
            trunc: None,
        }
        .normalized()
    }

    /// Exact series from coefficients for exponents `lo..lo + coeffs.len()`.
    pub fn from_coeffs(lo: i64, coeffs: Vec<Complex64>) -> Self {
        LaurentSeries {
            start: lo,
            coeffs,
            trunc: None,
        }
        .normalized()
    }

    /// Truncated series: coefficients for `lo..lo + coeffs.len()`, exponents
    /// below `lo` declared discarded.
    pub fn from_truncated(lo: i64, coeffs: Vec<Complex64>) -> Self {
        LaurentSeries {
            start: lo,
            coeffs,
            trunc: Some(lo),
        }
        .normalized()
    }

    /// Lowest reliable exponent: the truncation order for truncated series,
    /// the lowest stored exponent otherwise.
    pub fn lo(&self) -> i64 {
        match self.trunc {
            Some(l) => l,
            None => self.start,
        }
    }

    /// Highest exponent that may carry a nonzero coefficient.
    pub fn hi(&self) -> i64 {
        self.start + self.coeffs.len() as i64 - 1
    }

    /// True if no truncation was performed anywhere in the history of this value.
    pub fn is_exact(&self) -> bool {
        self.trunc.is_none()
    }

    /// True if every known coefficient is zero and the series is exact.
    pub fn is_zero(&self) -> bool {
        self.trunc.is_none() && self.coeffs.is_empty()
    }

    /// Coefficient of w^k. Panics if `k` lies below the truncation window;
    /// exponents above the stored range are exactly zero.
    pub fn coeff(&self, k: i64) -> Complex64 {
        if let Some(l) = self.trunc {
            assert!(k >= l, "coefficient of w^{k} discarded by truncation at {l}");
        }
        if k < self.start || k > self.hi() {
            ZERO
        } else {
            self.coeffs[(k - self.start) as usize]
        }
    }

    /// True if the coefficient of w^k is known (not discarded).
    pub fn is_known(&self, k: i64) -> bool {
        match self.trunc {
            Some(l) => k >= l,
            None => true,
        }
    }

    /// Coefficient of w^-1. Errors when -1 lies below the window.
    pub fn residue(&self) -> Result<Complex64, LaurentError> {
        if !self.is_known(-1) {
            return Err(LaurentError::ResidueOutsideWindow { lo: self.lo() });
        }
        Ok(self.coeff(-1))
    }

    /// Series with every coefficient conjugated (h -> h-bar).
    pub fn conj_coeffs(&self) -> Self {
        LaurentSeries {
            start: self.start,
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
            trunc: self.trunc,
        }
    }

    /// Substitution w -> 1/w (exponent reversal). Only exact series admit
    /// this: reversing a truncated window would leave the high end unknown.
    pub fn reverse(&self) -> Self {
        assert!(
            self.is_exact(),
            "cannot reverse a truncated series: the high end would be unknown"
        );
        let hi = self.hi();
        let mut coeffs: Vec<Complex64> = self.coeffs.clone();
        coeffs.reverse();
        LaurentSeries {
            start: -hi,
            coeffs,
            trunc: None,
        }
        .normalized()
    }

    /// Termwise derivative d/dw.
    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * (self.start + i as i64) as f64)
            .collect();
        LaurentSeries {
            start: self.start - 1,
            coeffs,
            trunc: self.trunc.map(|l| l - 1),
        }
        .normalized()
    }

    /// Termwise antiderivative. The w^-1 term has no Laurent antiderivative
    /// and is returned separately: the result is (P, c) with P' = self - c/w.
    pub fn antiderivative(&self) -> (Self, Complex64) {
        let mut res = ZERO;
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.start + i as i64;
            if k == -1 {
                res = *c;
                coeffs.push(ZERO); // placeholder for exponent 0
            } else {
                coeffs.push(c / (k + 1) as f64);
            }
        }
        let p = LaurentSeries {
            start: self.start + 1,
            coeffs,
            trunc: self.trunc.map(|l| l + 1),
        }
        .normalized();
        (p, res)
    }

    /// Multiply the argument: c_k -> lambda^k c_k, i.e. f(w) -> f(lambda w).
    pub fn dilate(&self, lambda: Complex64) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        let mut f = lambda.powi(self.start as i32);
        for c in &self.coeffs {
            coeffs.push(c * f);
            f *= lambda;
        }
        LaurentSeries {
            start: self.start,
            coeffs,
            trunc: self.trunc,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        LaurentSeries {
            start: self.start,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            trunc: self.trunc,
        }
        .normalized()
    }

    /// Shift exponents: f -> w^k * f.
    pub fn shift(&self, k: i64) -> Self {
        LaurentSeries {
            start: self.start + k,
            coeffs: self.coeffs.clone(),
            trunc: self.trunc.map(|l| l + k),
        }
    }

    /// Discard coefficients below exponent `l`, recording the truncation.
    pub fn truncate_below(&self, l: i64) -> Self {
        if self.lo() >= l && self.trunc.is_some() {
            return self.clone();
        }
        let keep_from = l.max(self.start);
        let coeffs = if keep_from > self.hi() {
            Vec::new()
        } else {
            self.coeffs[(keep_from - self.start) as usize..].to_vec()
        };
        LaurentSeries {
            start: keep_from,
            coeffs,
            trunc: Some(match self.trunc {
                Some(t) => t.max(l),
                None => l,
            }),
        }
        .normalized()
    }

    /// Evaluate the stored part at w.
    pub fn eval(&self, w: Complex64) -> Complex64 {
        let mut sum = ZERO;
        let mut p = w.powi(self.start as i32);
        for c in &self.coeffs {
            sum += c * p;
            p *= w;
        }
        sum
    }

    fn coeff_raw(&self, k: i64) -> Complex64 {
        if k < self.start || k > self.hi() {
            ZERO
        } else {
            self.coeffs[(k - self.start) as usize]
        }
    }

    /// Largest |c_k| over the stored window.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn normalized(mut self) -> Self {
        // Trim known-zero high coefficients.
        while let Some(c) = self.coeffs.last() {
            if *c == ZERO {
                self.coeffs.pop();
            } else {
                break;
            }
        }
        match self.trunc {
            None => {
                // Exact: trim low zeros too.
                let mut skip = 0;
                while skip < self.coeffs.len() && self.coeffs[skip] == ZERO {
                    skip += 1;
                }
                if skip > 0 {
                    self.coeffs.drain(..skip);
                    self.start += skip as i64;
                }
                if self.coeffs.is_empty() {
                    self.start = 0;
                }
            }
            Some(l) => {
                // Keep the window: pad down to the truncation order so the
                // stored range always covers lo()..=hi().
                debug_assert!(self.start >= l);
                if self.start > l {
                    let pad = (self.start - l) as usize;
                    let mut v = vec![ZERO; pad];
                    v.extend_from_slice(&self.coeffs);
                    self.coeffs = v;
                    self.start = l;
                }
                if self.coeffs.is_empty() {
                    self.coeffs.push(ZERO);
                }
            }
        }
        self
    }

    fn add_signed(&self, other: &Self, sign: f64) -> Self {
        if self.is_zero() {
            return other.scale(Complex64::new(sign, 0.0));
        }
        if other.is_zero() {
            return self.clone();
        }
        // An exact input constrains nothing: its coefficients below the
        // stored range are known zeros.
        let lo = match (self.trunc, other.trunc) {
            (None, None) => self.start.min(other.start),
            (Some(l), None) => l,
            (None, Some(l)) => l,
            (Some(a), Some(b)) => a.max(b),
        };
        let hi = self.hi().max(other.hi());
        if hi < lo {
            return LaurentSeries {
                start: lo,
                coeffs: vec![ZERO],
                trunc: Some(lo),
            };
        }
        let mut coeffs = vec![ZERO; (hi - lo + 1) as usize];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let k = lo + i as i64;
            *c = self.coeff_raw(k) + other.coeff_raw(k) * sign;
        }
        let trunc = match (self.trunc, other.trunc) {
            (None, None) => None,
            _ => Some(lo),
        };
        LaurentSeries { start: lo, coeffs, trunc }.normalized()
    }

    /// Cauchy product restricted to the provably correct exponent window.
    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let hi = self.hi() + other.hi();
        // Unknown tails of one factor meet the support of the other at or
        // below lo_t + hi_other - 1, so the product is reliable above that.
        let lo = match (self.trunc, other.trunc) {
            (None, None) => self.start + other.start,
            _ => {
                let mut l = i64::MIN;
                if self.trunc.is_some() {
                    l = l.max(self.lo() + other.hi());
                }
                if other.trunc.is_some() {
                    l = l.max(other.lo() + self.hi());
                }
                l
            }
        };
        let trunc = match (self.trunc, other.trunc) {
            (None, None) => None,
            _ => Some(lo),
        };
        if hi < lo {
            return LaurentSeries {
                start: lo,
                coeffs: vec![ZERO],
                trunc: Some(lo),
            };
        }
        let mut coeffs = vec![ZERO; (hi - lo + 1) as usize];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            let ka = self.start + i as i64;
            for (j, b) in other.coeffs.iter().enumerate() {
                let k = ka + other.start + j as i64;
                if k >= lo {
                    coeffs[(k - lo) as usize] += a * b;
                }
            }
        }
        LaurentSeries { start: lo, coeffs, trunc }.normalized()
    }

    /// a^(-j) as a series correct down to exponent `-order`, computed by
    /// geometric (binomial) expansion around infinity. The input must have
    /// a nonzero leading term c*w^p followed only by lower-order terms.
    pub fn inv_power(&self, j: u32, order: i64) -> Result<Self, LaurentError> {
        let p = self.hi();
        if self.coeffs.is_empty() || self.coeff_raw(p) == ZERO {
            return Err(LaurentError::NonInvertible);
        }
        let c = self.coeff_raw(p);
        let jp = j as i64 * p;
        // After multiplying by w^(-jp), the expansion must reach -order.
        let needed_lo = (-order + jp).min(0);
        // u has only negative exponents: u = a / (c w^p) - 1.
        let u = self
            .scale(1.0 / c)
            .shift(-p)
            .add_signed(&Self::one(), -1.0)
            .truncate_below(needed_lo);
        let mut sum = Self::one();
        if !u.is_zero() || u.trunc.is_some() {
            let mut term = Self::one();
            let mut m: u64 = 0;
            loop {
                // term_{m+1} = term_m * (-u) * (j + m) / (m + 1)
                let factor = -((j as u64 + m) as f64) / (m as f64 + 1.0);
                term = term.mul(&u).scale(Complex64::new(factor, 0.0));
                term = term.truncate_below(needed_lo);
                m += 1;
                if term.max_abs() == 0.0 || m > 4 * (order.unsigned_abs() + jp.unsigned_abs() + 4)
                {
                    break;
                }
                sum = sum.add_signed(&term, 1.0);
            }
        }
        let mut out = sum.scale(c.powi(-(j as i32))).shift(-jp);
        out = out.truncate_below(-order);
        Ok(out)
    }
}

impl std::ops::Add<&LaurentSeries> for &LaurentSeries {
    type Output = LaurentSeries;
    fn add(self, rhs: &LaurentSeries) -> LaurentSeries {
        self.add_signed(rhs, 1.0)
    }
}

impl std::ops::Sub<&LaurentSeries> for &LaurentSeries {
    type Output = LaurentSeries;
    fn sub(self, rhs: &LaurentSeries) -> LaurentSeries {
        self.add_signed(rhs, -1.0)
    }
}

impl std::ops::Mul<&LaurentSeries> for &LaurentSeries {
    type Output = LaurentSeries;
    fn mul(self, rhs: &LaurentSeries) -> LaurentSeries {
        LaurentSeries::mul(self, rhs)
    }
}

impl std::ops::Neg for &LaurentSeries {
    type Output = LaurentSeries;
    fn neg(self) -> LaurentSeries {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            let k = self.start + i as i64;
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if k == 0 {
                write!(f, "({c})")?;
            } else {
                write!(f, "({c})w^{k}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        if let Some(l) = self.trunc {
            write!(f, " + O(w^{})", l - 1)?;
        }
        Ok(())
    }
}
