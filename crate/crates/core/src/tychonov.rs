//! Tychonov's solution `v(x,t) = sum_k h^(k)(t) x^(2k) / (2k)!`, `h(t) = exp(-1/t^2)`
//! for `t > 0` and `0` otherwise: a nonzero heat flow that vanishes for `t <= 0`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{FromPrimitive, ToPrimitive, Zero};

use crate::discrete::Grid;
use crate::error::{Error, Result};
use crate::heat::TimeTaylorSeries;
use crate::math::{abs, exp, ln, DoubleDouble};

pub const DEFAULT_TERMS: usize = 40;
/// Largest tail accepted, relative to the partial sum.
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// `Q_0..Q_K` with `h^(k)(t) = Q_k(1/t) exp(-1/t^2)`; coefficients indexed by degree.
#[derive(Debug, Clone)]
pub struct TychonovTable {
    polys: Vec<Vec<BigInt>>,
    dd: Vec<Vec<DoubleDouble>>,
}

fn to_dd(c: &BigInt) -> DoubleDouble {
    let hi = c.to_f64().unwrap_or(f64::INFINITY);
    if !hi.is_finite() {
        return DoubleDouble::new(hi);
    }
    let rest = c - BigInt::from_f64(hi).unwrap_or_default();
    DoubleDouble { hi, lo: rest.to_f64().unwrap_or(0.0) }
}

impl TychonovTable {
    pub fn new(k_max: usize) -> Self {
        let mut polys: Vec<Vec<BigInt>> = vec![vec![BigInt::from(1)]];
        for _ in 0..k_max {
            let q = polys.last().expect("nonempty");
            let mut next = vec![BigInt::zero(); q.len() + 3];
            for (d, c) in q.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                next[d + 3] += c * 2;
                if d > 0 {
                    next[d + 1] -= c * BigInt::from(d);
                }
            }
            while next.last().is_some_and(|c| c.is_zero()) {
                next.pop();
            }
            polys.push(next);
        }
        let dd = polys.iter().map(|p| p.iter().map(to_dd).collect()).collect();
        Self { polys, dd }
    }

    /// Highest `k` in the table.
    pub fn order(&self) -> usize {
        self.polys.len() - 1
    }

    pub fn poly(&self, k: usize) -> &[BigInt] {
        &self.polys[k]
    }

    /// `Q_k(s)` in double-double.
    pub fn eval_q(&self, k: usize, s: DoubleDouble) -> DoubleDouble {
        self.dd[k].iter().rev().fold(DoubleDouble::ZERO, |acc, c| acc * s + *c)
    }

    /// `ln |Q_k(s)|` for `s > 0` without overflow.
    pub fn log_abs_q(&self, k: usize, s: f64) -> f64 {
        let c = &self.dd[k];
        let deg = c.len() - 1;
        let inv = DoubleDouble::new(s).recip();
        // Q(s) = s^deg * sum_d c_d inv^(deg - d), Horner over ascending degree
        let mut rev = DoubleDouble::ZERO;
        for coef in c.iter() {
            rev = rev * inv + *coef;
        }
        deg as f64 * ln(s) + ln(abs(rev.to_f64()))
    }

    /// `h^(k)(t)`.
    pub fn derivative(&self, k: usize, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let s = DoubleDouble::new(1.0) / DoubleDouble::new(t);
        (self.eval_q(k, s) * exp_neg_sq(s)).to_f64()
    }

    /// `ln |h^(k)(t)|`, `-inf` for `t <= 0`.
    pub fn log_abs_derivative(&self, k: usize, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let s = 1.0 / t;
        self.log_abs_q(k, s) - s * s
    }

    /// Partial sum of `v` through `k = terms` with a tail estimate.
    pub fn value(&self, x: f64, t: f64, terms: usize) -> TychonovValue {
        self.time_derivative(x, t, 0, terms)
    }

    /// `d^j/dt^j v(x,t) = sum_k h^(k+j)(t) x^(2k) / (2k)!`, partial sum through `k = terms`.
    pub fn time_derivative(&self, x: f64, t: f64, j: usize, terms: usize) -> TychonovValue {
        assert!(terms + j <= self.order(), "table too short");
        if t <= 0.0 {
            return TychonovValue { value: 0.0, tail: 0.0, reliable: true, terms };
        }
        let s = DoubleDouble::new(1.0) / DoubleDouble::new(t);
        let damp = exp_neg_sq(s);
        let x2 = DoubleDouble::new(x) * DoubleDouble::new(x);
        let mut p = DoubleDouble::ONE;
        let mut sum = DoubleDouble::ZERO;
        let mut mags = Vec::with_capacity(terms + 1);
        for k in 0..=terms {
            if k > 0 {
                p = p * x2 / DoubleDouble::new(((2 * k - 1) * 2 * k) as f64);
            }
            let term = self.eval_q(k + j, s) * p;
            sum += term;
            mags.push(abs((term * damp).to_f64()));
        }
        let value = (sum * damp).to_f64();
        let (tail, decaying) = tail_estimate(&mags);
        let reliable = decaying && value.is_finite() && tail <= TAIL_TOLERANCE * abs(value) + f64::MIN_POSITIVE;
        TychonovValue { value, tail, reliable, terms }
    }
}

/// Geometric tail from the last two terms against the two before them.
fn tail_estimate(mags: &[f64]) -> (f64, bool) {
    let k = mags.len();
    if k < 4 {
        let last = mags[k - 1];
        return (last, last == 0.0);
    }
    let recent = mags[k - 1] + mags[k - 2];
    let before = mags[k - 3] + mags[k - 4];
    if recent == 0.0 {
        return (0.0, true);
    }
    if before == 0.0 || !recent.is_finite() {
        return (f64::INFINITY, false);
    }
    let q = recent / before;
    if q >= 1.0 {
        return (f64::INFINITY, false);
    }
    // two terms per ratio step
    let r = libm::sqrt(q);
    (mags[k - 1] * r / (1.0 - r), true)
}

fn exp_neg_sq(s: DoubleDouble) -> DoubleDouble {
    let s2 = s * s;
    let e = exp(-s2.hi);
    DoubleDouble::new(e) * (DoubleDouble::ONE - DoubleDouble::new(s2.lo))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TychonovValue {
    pub value: f64,
    /// estimated magnitude of the omitted terms
    pub tail: f64,
    /// false when the terms are not yet decaying at `k = terms` or the tail is not small
    pub reliable: bool,
    pub terms: usize,
}

pub fn tychonov_derivative_table(k_max: usize) -> Result<TychonovTable> {
    if k_max < 1 {
        return Err(Error::validation("table order must be >= 1"));
    }
    Ok(TychonovTable::new(k_max))
}

/// One-off evaluation; build a [`TychonovTable`] for repeated use.
pub fn tychonov_value(x: f64, t: f64, terms: usize) -> TychonovValue {
    TychonovTable::new(terms.max(1)).value(x, t, terms.max(1))
}

/// Time-Taylor series at `t = time` of the `terms`-term profile: `a_j` is the exact `j`-th
/// Laplacian of the truncated sum, i.e. the derivative series cut at `k = terms - j`.
pub fn profile_series(grid: &Arc<Grid>, time: f64, terms: usize, order: usize) -> Result<TimeTaylorSeries> {
    if order > terms {
        return Err(Error::validation("series order exceeds the profile's term count"));
    }
    if !matches!(grid.shape(), crate::discrete::Shape::Line { .. }) {
        return Err(Error::unsupported("Tychonov profiles live on one-dimensional grids"));
    }
    let table = TychonovTable::new(terms);
    let coeffs = (0..=order)
        .map(|j| {
            grid.points()
                .iter()
                .map(|p| table.time_derivative(p.coords[0], time, j, terms - j).value)
                .collect()
        })
        .collect();
    TimeTaylorSeries::from_coefficients(grid.clone(), coeffs, time, 0, crate::heat::DEFAULT_DELTA_MAX)
}

#[derive(Debug, Clone)]
pub struct SharpnessConfig {
    /// samples `|x| <= window` for items (i) and (iii)
    pub window: f64,
    pub window_samples: usize,
    pub terms: usize,
    /// time-Taylor order checked in item (iii)
    pub taylor_order: usize,
    /// growth sweep: times and ray `x in [lo, hi]`
    pub growth_times: Vec<f64>,
    pub growth_ray: (f64, f64),
    pub growth_samples: usize,
    pub tested_c: Vec<f64>,
    pub epsilon: f64,
}

impl Default for SharpnessConfig {
    fn default() -> Self {
        Self {
            window: 2.0,
            window_samples: 41,
            terms: DEFAULT_TERMS,
            taylor_order: 20,
            growth_times: vec![0.5, 1.0],
            growth_ray: (1.0, 4.0),
            growth_samples: 31,
            tested_c: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            epsilon: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GrowthSample {
    pub x: f64,
    pub t: f64,
    pub log_abs_v: f64,
}

#[derive(Debug, Clone)]
pub struct SharpnessReport {
    /// (i) `max |v(x,t)|` over the window at `t in {0, -0.5, -1}`
    pub past_max_abs: f64,
    /// (ii)
    pub v_origin_half: f64,
    /// (iii) max over `j <= taylor_order` and window of `|d^j/dt^j v(x,0)|`
    pub taylor_coefficients_max_abs: f64,
    /// (iii) `max |v(x, 0.5)|` over the window: the solution is not identically zero after `t = 0`
    pub later_max_abs: f64,
    pub growth: Vec<GrowthSample>,
    /// `(c, exceeded)`: whether `log|v| > c x^2` at some sampled point
    pub quadratic_exceeded: Vec<(f64, bool)>,
    pub max_log_ratio: f64,
    /// envelope `c1 + c2 |x|^(2+eps)` dominating every sample
    pub envelope: (f64, f64),
    pub max_tail: f64,
}

impl SharpnessReport {
    pub fn verdict(&self) -> bool {
        self.past_max_abs == 0.0
            && self.v_origin_half > 0.018
            && self.taylor_coefficients_max_abs == 0.0
            && self.later_max_abs > 0.0
    }
}

pub fn demonstrate_sharpness(cfg: &SharpnessConfig) -> Result<SharpnessReport> {
    if cfg.terms < 4 || cfg.window <= 0.0 || cfg.window_samples < 2 || cfg.growth_samples < 2 {
        return Err(Error::validation("sharpness config needs terms >= 4 and a nonempty window"));
    }
    let table = TychonovTable::new(cfg.terms + cfg.taylor_order);
    let mut max_tail = 0.0f64;
    let mut check = |v: TychonovValue, x: f64, t: f64| -> Result<f64> {
        if !v.reliable {
            return Err(Error::numerical(format!(
                "Tychonov series tail not decaying at x={x}, t={t} with K={}; increase K",
                v.terms
            )));
        }
        max_tail = max_tail.max(v.tail);
        Ok(v.value)
    };
    let xs: Vec<f64> = (0..cfg.window_samples)
        .map(|i| -cfg.window + 2.0 * cfg.window * i as f64 / (cfg.window_samples - 1) as f64)
        .collect();
    let mut past = 0.0f64;
    let mut taylor = 0.0f64;
    let mut later = 0.0f64;
    for &x in &xs {
        for t in [0.0, -0.5, -1.0] {
            past = past.max(abs(check(table.value(x, t, cfg.terms), x, t)?));
        }
        for j in 0..=cfg.taylor_order {
            taylor = taylor.max(abs(table.time_derivative(x, 0.0, j, cfg.terms).value));
        }
        later = later.max(abs(check(table.value(x, 0.5, cfg.terms), x, 0.5)?));
    }
    let origin = check(table.value(0.0, 0.5, cfg.terms), 0.0, 0.5)?;

    let mut growth = Vec::new();
    let (lo, hi) = cfg.growth_ray;
    for &t in &cfg.growth_times {
        for i in 0..cfg.growth_samples {
            let x = lo + (hi - lo) * i as f64 / (cfg.growth_samples - 1) as f64;
            let v = check(table.value(x, t, cfg.terms), x, t)?;
            if v != 0.0 {
                growth.push(GrowthSample { x, t, log_abs_v: ln(abs(v)) });
            }
        }
    }
    let max_log_ratio = growth
        .iter()
        .map(|g| g.log_abs_v / (g.x * g.x))
        .fold(f64::NEG_INFINITY, f64::max);
    let quadratic_exceeded = cfg
        .tested_c
        .iter()
        .map(|&c| (c, growth.iter().any(|g| g.log_abs_v > c * g.x * g.x)))
        .collect();
    let envelope = fit_envelope(&growth, 2.0 + cfg.epsilon);
    Ok(SharpnessReport {
        past_max_abs: past,
        v_origin_half: origin,
        taylor_coefficients_max_abs: taylor,
        later_max_abs: later,
        growth,
        quadratic_exceeded,
        max_log_ratio,
        envelope,
        max_tail,
    })
}

/// Least-squares slope of `log|v|` on `|x|^p`, then the offset raised until the envelope dominates.
fn fit_envelope(g: &[GrowthSample], p: f64) -> (f64, f64) {
    if g.is_empty() {
        return (0.0, 0.0);
    }
    let n = g.len() as f64;
    let xs: Vec<f64> = g.iter().map(|s| libm::pow(abs(s.x), p)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = g.iter().map(|s| s.log_abs_v).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(g).map(|(x, s)| (x - mx) * (s.log_abs_v - my)).sum();
    let c2 = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
    let c1 = xs
        .iter()
        .zip(g)
        .map(|(x, s)| s.log_abs_v - c2 * x)
        .fold(f64::NEG_INFINITY, f64::max);
    (c1, c2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_polynomials() {
        let t = TychonovTable::new(3);
        let q1: Vec<i64> = t.poly(1).iter().map(|c| c.to_i64().unwrap()).collect();
        assert_eq!(q1, vec![0, 0, 0, 2]);
        let q2: Vec<i64> = t.poly(2).iter().map(|c| c.to_i64().unwrap()).collect();
        assert_eq!(q2, vec![0, 0, 0, 0, -6, 0, 4]);
    }

    #[test]
    fn values_at_origin_and_past() {
        let v = tychonov_value(0.0, 0.5, 40);
        assert!((v.value - (-4.0f64).exp()).abs() < 1e-15);
        assert_eq!(tychonov_value(1.3, -1.0, 40).value, 0.0);
        assert_eq!(tychonov_value(1.3, 0.0, 40).value, 0.0);
    }

    #[test]
    fn second_derivative_by_differences() {
        let t = TychonovTable::new(2);
        let (x, h) = (0.7, 1e-4);
        let fd = (t.derivative(0, x + h) - 2.0 * t.derivative(0, x) + t.derivative(0, x - h)) / (h * h);
        let exact = t.derivative(2, x);
        assert!(((fd - exact) / exact).abs() < 1e-5);
    }

    #[test]
    fn tiny_times_underflow_in_log_domain() {
        let t = TychonovTable::new(20);
        for k in 0..=20 {
            assert!(t.log_abs_derivative(k, 1e-2) < ln(1e-100));
        }
        let direct = t.log_abs_derivative(3, 0.8);
        assert!((direct - ln(abs(t.derivative(3, 0.8)))).abs() < 1e-12);
    }

    #[test]
    fn default_sharpness_is_reliable_at_k40() {
        let r = demonstrate_sharpness(&SharpnessConfig::default()).unwrap();
        assert!(r.verdict());
        assert_eq!(r.past_max_abs, 0.0);
        assert!(r.growth.iter().all(|g| g.log_abs_v <= r.envelope.0 + r.envelope.1 * libm::pow(g.x.abs(), 2.5) + 1e-9));
    }

    #[test]
    fn wide_window_asks_for_more_terms() {
        let cfg = SharpnessConfig { growth_ray: (5.0, 12.0), growth_times: vec![1.0], ..Default::default() };
        assert!(matches!(demonstrate_sharpness(&cfg), Err(Error::Numerical(_))));
    }

    #[test]
    fn k40_and_k60_agree() {
        let t = TychonovTable::new(60);
        let a = t.value(1.0, 0.5, 40);
        let b = t.value(1.0, 0.5, 60);
        assert!(a.reliable && b.reliable);
        assert!((a.value - b.value).abs() <= a.tail.max(1e-16));
    }
}
