use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::data::ClosedForm;
use crate::discrete::extended::exact_taylor_coefficients;
use crate::discrete::{iterate_laplacian, Grid, GridField, LaplaceBeltrami, SpectralFilter};
use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::math::{abs, exp, ln, ln_factorial, sqrt};

pub const DEFAULT_ORDER: usize = 20;
pub const MAX_ORDER: usize = 40;
pub const DEFAULT_DELTA_MAX: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusEstimate {
    pub delta: f64,
    /// the coefficient roots tend to zero (or the series terminates)
    pub entire: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorOptions {
    pub filter: Option<SpectralFilter>,
    pub delta_max: f64,
}

impl Default for TaylorOptions {
    fn default() -> Self {
        Self { filter: None, delta_max: DEFAULT_DELTA_MAX }
    }
}

/// `u(x, t0 + t) = sum_j a_j(x) t^j / j!` with `a_{j+1} = A a_j`.
#[derive(Debug, Clone)]
pub struct TimeTaylorSeries {
    pub grid: Arc<Grid>,
    pub coefficients: Vec<Vec<f64>>,
    pub center: f64,
    /// nodes unaffected by boundary contamination through order `J`
    pub mask: Vec<bool>,
    pub radius: RadiusEstimate,
    pub filter: Option<SpectralFilter>,
}

impl TimeTaylorSeries {
    /// Wrap precomputed coefficients; `contamination` is the hop count masked out.
    pub fn from_coefficients(
        grid: Arc<Grid>,
        coefficients: Vec<Vec<f64>>,
        center: f64,
        contamination: u32,
        delta_max: f64,
    ) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::validation("series needs at least a_0"));
        }
        if coefficients.len() > MAX_ORDER + 1 {
            return Err(Error::validation(format!("series order is capped at {MAX_ORDER}")));
        }
        if coefficients.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::validation("coefficient length does not match the grid"));
        }
        if let Some(j) = coefficients.iter().position(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(Error::numerical(format!("coefficient a_{j} is not finite")));
        }
        let mask = grid.interior_mask(contamination);
        if !mask.iter().any(|m| *m) {
            return Err(Error::validation("boundary contamination covers the whole grid"));
        }
        let mut s = Self {
            grid,
            coefficients,
            center,
            mask,
            radius: RadiusEstimate { delta: delta_max, entire: true },
            filter: None,
        };
        if s.order() >= 4 {
            s.radius = estimate_radius(&s, delta_max)?;
        }
        Ok(s)
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn field(&self, j: usize) -> GridField {
        GridField { grid: self.grid.clone(), values: self.coefficients[j].clone() }
    }

    /// `sup |a_j|` over the mask.
    pub fn sup(&self, j: usize) -> f64 {
        self.coefficients[j]
            .iter()
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .fold(0.0f64, |a, (v, _)| a.max(abs(*v)))
    }
}

pub fn check_order(j_max: usize) -> Result<()> {
    if j_max > MAX_ORDER {
        return Err(Error::validation(format!("series order J={j_max} exceeds the cap {MAX_ORDER}")));
    }
    Ok(())
}

pub fn time_taylor_coefficients(op: &LaplaceBeltrami, a: &GridField, j_max: usize) -> Result<TimeTaylorSeries> {
    time_taylor_coefficients_with(op, a, j_max, TaylorOptions::default())
}

pub fn time_taylor_coefficients_with(
    op: &LaplaceBeltrami,
    a: &GridField,
    j_max: usize,
    opts: TaylorOptions,
) -> Result<TimeTaylorSeries> {
    check_order(j_max)?;
    let it = iterate_laplacian(op, a, j_max, opts.filter)?;
    if let Some(j) = it.diverged_at {
        return Err(Error::numerical(format!("iterated Laplacian diverged at j={j}")));
    }
    let hops = *it.contamination.last().unwrap_or(&0);
    let mut s = TimeTaylorSeries::from_coefficients(op.grid().clone(), it.fields, 0.0, hops, opts.delta_max)?;
    s.filter = opts.filter;
    Ok(s)
}

/// Coefficients from exact integer iteration of closed-form data (truncated lines with `1/h` integral).
pub fn time_taylor_coefficients_exact(
    grid: &Arc<Grid>,
    data: &ClosedForm,
    j_max: usize,
    delta_max: f64,
) -> Result<TimeTaylorSeries> {
    check_order(j_max)?;
    let coeffs = exact_taylor_coefficients(grid, data, j_max)?;
    TimeTaylorSeries::from_coefficients(grid.clone(), coeffs, 0.0, j_max as u32, delta_max)
}

/// Radius of convergence in `t` from the top half of `ln(sup|a_j| / j!)`.
///
/// The fit uses `{1, j, sqrt j, ln j}` so the sub-geometric factors typical of
/// quadratic-exponential data do not bias the geometric rate.
pub fn estimate_radius(series: &TimeTaylorSeries, delta_max: f64) -> Result<RadiusEstimate> {
    let jm = series.order();
    if jm < 4 {
        return Err(Error::validation("radius estimation needs J >= 4"));
    }
    let entire = RadiusEstimate { delta: delta_max, entire: true };
    let lo = jm.div_ceil(2);
    let logs: Vec<(usize, f64)> = (lo..=jm).map(|j| (j, ln(series.sup(j)) - ln_factorial(j))).collect();
    if logs.iter().any(|(_, v)| *v == f64::NEG_INFINITY) {
        return Ok(entire);
    }
    // ratio test: c_j / c_{j-1} ~ A + B/j, A the reciprocal radius
    let ratios: Vec<(f64, f64)> = (lo.max(1)..=jm)
        .map(|j| {
            let prev = ln(series.sup(j - 1)) - ln_factorial(j - 1);
            let cur = ln(series.sup(j)) - ln_factorial(j);
            (j as f64, exp(cur - prev))
        })
        .collect();
    if ratios.iter().all(|r| r.1.is_finite()) {
        let rows: Vec<Vec<f64>> = ratios.iter().map(|(j, _)| alloc::vec![1.0, 1.0 / j]).collect();
        let rhs: Vec<f64> = ratios.iter().map(|r| r.1).collect();
        if let Some(c) = least_squares(&rows, &rhs) {
            if c[0] * delta_max <= 1.0 {
                return Ok(entire);
            }
        }
    }
    let basis = |j: f64| -> Vec<f64> {
        if logs.len() >= 6 {
            alloc::vec![1.0, j, sqrt(j), ln(j)]
        } else {
            alloc::vec![1.0, j]
        }
    };
    let rows: Vec<Vec<f64>> = logs.iter().map(|(j, _)| basis(*j as f64)).collect();
    let rhs: Vec<f64> = logs.iter().map(|(_, v)| *v).collect();
    let c = least_squares(&rows, &rhs).ok_or_else(|| Error::numerical("radius regression is singular"))?;
    let rate = c[1];
    let delta = exp(-rate);
    if !(delta < delta_max) {
        return Ok(entire);
    }
    Ok(RadiusEstimate { delta, entire: false })
}

#[derive(Debug, Clone)]
pub struct SeriesEvaluation {
    pub field: GridField,
    /// bound on the omitted terms over the mask, `inf` when unreliable
    pub truncation_bound: f64,
    pub reliable: bool,
    /// `|t - t0|` reached the estimated radius
    pub outside_radius: bool,
}

/// Partial sum at `t0 + t` by Horner's rule in `t`.
pub fn evaluate_series(series: &TimeTaylorSeries, t: f64) -> SeriesEvaluation {
    let jm = series.order();
    let n = series.grid.len();
    let mut acc = series.coefficients[jm].clone();
    for j in (0..jm).rev() {
        let f = t / (j + 1) as f64;
        let a = &series.coefficients[j];
        for i in 0..n {
            acc[i] = a[i] + acc[i] * f;
        }
    }
    let term = |j: usize| -> f64 {
        if t == 0.0 {
            return if j == 0 { series.sup(0) } else { 0.0 };
        }
        exp(ln(series.sup(j)) + j as f64 * ln(abs(t)) - ln_factorial(j))
    };
    let (bound, reliable) = if jm == 0 {
        (if t == 0.0 { 0.0 } else { f64::INFINITY }, t == 0.0)
    } else {
        let last = term(jm);
        let prev = term(jm - 1);
        if last == 0.0 {
            (0.0, true)
        } else if prev == 0.0 {
            (f64::INFINITY, false)
        } else {
            let q = last / prev;
            if q < 1.0 {
                (last * q / (1.0 - q), true)
            } else {
                (f64::INFINITY, false)
            }
        }
    };
    SeriesEvaluation {
        field: GridField { grid: series.grid.clone(), values: acc },
        truncation_bound: bound,
        reliable,
        outside_radius: abs(t) >= series.radius.delta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{Stencil, Topology};
    use crate::math::PI;
    use crate::soliton::SolitonModel;

    fn spectral_sin(order: usize) -> TimeTaylorSeries {
        let m = SolitonModel::gaussian(1).unwrap();
        let g = Grid::build(&m, Topology::PeriodicLine { period: 2.0 * PI, spacing: 2.0 * PI / 256.0 }).unwrap();
        let op = LaplaceBeltrami::with_stencil(g.clone(), Stencil::Spectral).unwrap();
        let a = ClosedForm::Sin.sample(&g);
        let opts = TaylorOptions { filter: Some(SpectralFilter::default()), ..Default::default() };
        time_taylor_coefficients_with(&op, &a, order, opts).unwrap()
    }

    fn line(l: f64, h: f64) -> Arc<Grid> {
        let m = SolitonModel::gaussian(1).unwrap();
        Grid::build(&m, Topology::TruncatedLine { half_length: l, spacing: h }).unwrap()
    }

    #[test]
    fn sine_series_alternates_and_is_entire() {
        let s = spectral_sin(4);
        for j in 0..=4 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            for (c, a) in s.coefficients[j].iter().zip(&s.coefficients[0]) {
                assert!((c - sign * a).abs() < 1e-10);
            }
        }
        assert!(s.radius.entire);
        assert_eq!(s.radius.delta, DEFAULT_DELTA_MAX);
    }

    #[test]
    fn sine_series_backward_value() {
        let s = spectral_sin(20);
        let ev = evaluate_series(&s, -0.5);
        assert!(ev.reliable);
        for (p, v) in s.grid.points().iter().zip(&ev.field.values) {
            assert!((v - 0.5f64.exp() * p.coords[0].sin()).abs() < 1e-6);
        }
        let at0 = evaluate_series(&s, 0.0);
        assert_eq!(at0.field.values, s.coefficients[0]);
        assert_eq!(at0.truncation_bound, 0.0);
    }

    #[test]
    fn quadratic_terminates() {
        let g = line(4.0, 0.25);
        let op = LaplaceBeltrami::new(g.clone());
        let a = GridField::from_fn(g.clone(), |p| p.coords[0] * p.coords[0]);
        let s = time_taylor_coefficients(&op, &a, 5).unwrap();
        assert!(s.radius.entire);
        let ev = evaluate_series(&s, 7.0);
        for (i, v) in ev.field.values.iter().enumerate() {
            if s.mask[i] {
                let x = g.x(i);
                assert!((v - (x * x + 14.0)).abs() < 1e-9);
            }
        }
        assert_eq!(ev.truncation_bound, 0.0);
    }

    #[test]
    fn order_cap() {
        let g = line(4.0, 0.25);
        let op = LaplaceBeltrami::new(g.clone());
        let a = GridField::constant(g, 1.0);
        assert!(time_taylor_coefficients(&op, &a, 41).is_err());
    }

    #[test]
    fn exp_quadratic_radius_via_exact_iteration() {
        for tau in [0.5, 1.0] {
            let j = 16;
            let g = line(3.0 + j as f64 * 0.05, 0.05);
            let s = time_taylor_coefficients_exact(&g, &ClosedForm::ExpQuadratic { tau }, j, DEFAULT_DELTA_MAX).unwrap();
            let r = s.radius.delta / tau;
            assert!(!s.radius.entire);
            assert!((0.8..=1.25).contains(&r), "tau={tau}: ratio {r}");
        }
    }
}
