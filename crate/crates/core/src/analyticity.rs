//! Growth envelopes, coefficient-bound fits and the backward-solvability criterion.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::heat::{evaluate_series, HeatTrajectory, TimeTaylorSeries};
use crate::math::{abs, exp, j_ln_j, ln};
use crate::soliton::{Point, SolitonModel};

/// Slopes below this are read as bounded growth.
pub const GROWTH_SLOPE_FLOOR: f64 = 1e-3;
pub const A1_FLOOR: f64 = 1e-300;
pub const A3_FLOOR: f64 = 1e-12;
/// Relative increase of the minimal `A3` per four extra orders that marks infeasibility.
pub const INFEASIBILITY_GROWTH: f64 = 1.25;
/// Outer fraction of the sampled distance range where a maximiser signals a too-small `A4`.
pub const RIM_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthEnvelope {
    pub a1: f64,
    pub a2: f64,
    pub p: Point,
    /// the trajectory vanished identically
    pub trivial: bool,
}

/// Envelope `|u| <= A1 e^{A2 d^2}` from a fit of the upper envelope of `ln|u|` against `d^2`.
pub fn growth_classify(u: &HeatTrajectory, p: &Point) -> Result<GrowthEnvelope> {
    let model = u.grid.model();
    model.validate_point(p)?;
    let d2: Vec<f64> = u
        .grid
        .points()
        .iter()
        .map(|x| {
            let d = model.distance_unchecked(x, p);
            d * d
        })
        .collect();
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for snap in &u.snapshots {
        for (v, d) in snap.iter().zip(&d2) {
            if !v.is_finite() {
                return Err(Error::numerical("trajectory contains non-finite values"));
            }
            if *v != 0.0 {
                samples.push((*d, ln(abs(*v))));
            }
        }
    }
    if samples.is_empty() {
        return Ok(GrowthEnvelope { a1: A1_FLOOR, a2: 0.0, p: p.clone(), trivial: true });
    }
    let dmax = samples.iter().fold(0.0f64, |m, s| m.max(s.0));
    let bins = 16usize;
    let mut top = vec![f64::NEG_INFINITY; bins];
    let mut centre = vec![0.0; bins];
    for &(d, l) in &samples {
        let b = if dmax > 0.0 { ((d / dmax) * bins as f64) as usize } else { 0 }.min(bins - 1);
        if l > top[b] {
            top[b] = l;
            centre[b] = d;
        }
    }
    let pts: Vec<(f64, f64)> = top
        .iter()
        .zip(&centre)
        .filter(|(t, _)| t.is_finite())
        .map(|(t, c)| (*c, *t))
        .collect();
    let slope = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 {
            sxy / sxx
        } else {
            0.0
        }
    } else {
        0.0
    };
    let a2 = if slope > GROWTH_SLOPE_FLOOR { slope } else { 0.0 };
    let log_a1 = samples.iter().map(|(d, l)| l - a2 * d).fold(f64::NEG_INFINITY, f64::max);
    Ok(GrowthEnvelope { a1: exp(log_a1), a2, p: p.clone(), trivial: false })
}

/// `ln( e^{-mu/2} e^{f/2} (f+1)^{n/4} )`.
pub fn log_weight(model: &SolitonModel, x: &Point) -> f64 {
    let f = model.potential(x);
    -0.5 * model.entropy_mu() + 0.5 * f + 0.25 * model.dim() as f64 * ln(f + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `|a_j| <= A1 W A3^{j+1} j^j e^{2 A2 d^2}`
    Coefficient,
    /// `|a_j| <= W A3^{j+1} j^j e^{A4 d^2}`
    Criterion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub j: usize,
    /// binding node for this order
    pub node: usize,
    pub x: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundFitReport {
    pub kind: BoundKind,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub mu: f64,
    pub feasible: bool,
    pub residuals: Vec<ResidualRow>,
    /// minimal `A3` using orders `2..=J'`, indexed by `J'` (criterion fits)
    pub a3_by_order: Vec<f64>,
    /// `A3(J) / A3(J-4)` when `J >= 6`
    pub growth_ratio: Option<f64>,
    /// least-squares slope in `j` of `max_x (ln|a_j| - ln W - j ln j - A4 d^2)` over the top half
    pub tail_slope: Option<f64>,
    /// no grid `A4` kept the maximisers off the window rim
    pub a4_saturated: bool,
}

impl BoundFitReport {
    /// Right-hand side in log form at order `j`, node data `ln_w`, `d2`.
    pub fn ln_rhs(&self, j: usize, ln_w: f64, d2: f64) -> f64 {
        let base = ln_w + (j as f64 + 1.0) * ln(self.a3) + j_ln_j(j);
        match self.kind {
            BoundKind::Coefficient => ln(self.a1) + base + 2.0 * self.a2 * d2,
            BoundKind::Criterion => base + self.a4 * d2,
        }
    }
}

/// Per-node data shared by the fits.
struct Samples {
    nodes: Vec<usize>,
    ln_w: Vec<f64>,
    d2: Vec<f64>,
    /// `ln|a_j(x)|` per order then node
    ln_a: Vec<Vec<f64>>,
}

fn collect(series: &TimeTaylorSeries, model: &SolitonModel, p: &Point) -> Result<Samples> {
    model.validate_point(p)?;
    if series.grid.model().dim() != model.dim() {
        return Err(Error::validation("series grid and model dimensions differ"));
    }
    let nodes: Vec<usize> = (0..series.grid.len()).filter(|i| series.mask[*i]).collect();
    let pts = series.grid.points();
    let ln_w = nodes.iter().map(|&i| log_weight(model, &pts[i])).collect();
    let d2 = nodes
        .iter()
        .map(|&i| {
            let d = model.distance_unchecked(&pts[i], p);
            d * d
        })
        .collect();
    let mut ln_a = Vec::with_capacity(series.order() + 1);
    for c in &series.coefficients {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("series coefficients are not finite"));
        }
        ln_a.push(nodes.iter().map(|&i| ln(abs(c[i]))).collect());
    }
    Ok(Samples { nodes, ln_w, d2, ln_a })
}

/// Smallest `ln A3` per order: `max_x (ln|a_j| - offset(x)) / (j+1)`, with its argmax.
fn per_order(s: &Samples, j: usize, offset: impl Fn(usize) -> f64) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for k in 0..s.nodes.len() {
        let v = (s.ln_a[j][k] - offset(k) - j_ln_j(j)) / (j as f64 + 1.0);
        if v > best {
            best = v;
            arg = k;
        }
    }
    (best, arg)
}

fn residual_rows(series: &TimeTaylorSeries, s: &Samples, rep: &BoundFitReport) -> Vec<ResidualRow> {
    let pts = series.grid.points();
    (0..=series.order())
        .map(|j| {
            let mut best = (f64::NEG_INFINITY, 0usize);
            for k in 0..s.nodes.len() {
                let gap = s.ln_a[j][k] - rep.ln_rhs(j, s.ln_w[k], s.d2[k]);
                if gap > best.0 {
                    best = (gap, k);
                }
            }
            let k = best.1;
            let ln_lhs = s.ln_a[j][k];
            let ln_rhs = rep.ln_rhs(j, s.ln_w[k], s.d2[k]);
            ResidualRow {
                j,
                node: s.nodes[k],
                x: pts[s.nodes[k]].coords.clone(),
                lhs: exp(ln_lhs),
                rhs: exp(ln_rhs),
                ln_lhs,
                ln_rhs,
            }
        })
        .collect()
}

/// Minimal `A3` for the coefficient bound given the solution's growth envelope.
pub fn verify_coefficient_bound(
    series: &TimeTaylorSeries,
    model: &SolitonModel,
    p: &Point,
    env: &GrowthEnvelope,
) -> Result<BoundFitReport> {
    if series.order() < 4 {
        return Err(Error::validation("coefficient bound fit needs J >= 4"));
    }
    let s = collect(series, model, p)?;
    let la1 = ln(env.a1);
    let mut best = f64::NEG_INFINITY;
    for j in 0..=series.order() {
        let (v, _) = per_order(&s, j, |k| la1 + s.ln_w[k] + 2.0 * env.a2 * s.d2[k]);
        best = best.max(v);
    }
    let a3 = exp(best).max(A3_FLOOR);
    let mut rep = BoundFitReport {
        kind: BoundKind::Coefficient,
        a1: env.a1,
        a2: env.a2,
        a3,
        a4: 0.0,
        mu: model.entropy_mu(),
        feasible: a3.is_finite(),
        residuals: Vec::new(),
        a3_by_order: Vec::new(),
        growth_ratio: None,
        tail_slope: None,
        a4_saturated: false,
    };
    rep.residuals = residual_rows(series, &s, &rep);
    Ok(rep)
}

/// Coarse `A4` grid: `0` and `2^{q/4} / 128` for `q = 0..=40`.
pub fn a4_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend((0..=40).map(|q| libm::pow(2.0, q as f64 / 4.0) / 128.0));
    g
}

/// Minimal `A3` at fixed `A4` over orders `j_lo..=j_hi` (`-inf` in log form if all vanish).
pub fn min_a3_at(series: &TimeTaylorSeries, model: &SolitonModel, p: &Point, a4: f64, j_lo: usize, j_hi: usize) -> Result<f64> {
    let s = collect(series, model, p)?;
    let mut best = f64::NEG_INFINITY;
    for j in j_lo..=j_hi.min(series.order()) {
        best = best.max(per_order(&s, j, |k| s.ln_w[k] + a4 * s.d2[k]).0);
    }
    Ok(exp(best))
}

/// Fit `(A3, A4)` for the criterion `|a_j| <= W A3^{j+1} j^j e^{A4 d^2}` and judge feasibility.
pub fn criterion_check(series: &TimeTaylorSeries, model: &SolitonModel, p: &Point) -> Result<BoundFitReport> {
    let jm = series.order();
    if jm < 4 {
        return Err(Error::validation("criterion check needs J >= 4"));
    }
    let s = collect(series, model, p)?;
    let dmax = s.d2.iter().fold(0.0f64, |m, v| m.max(*v));
    let dmax = crate::math::sqrt(dmax);
    let rim = (1.0 - RIM_FRACTION) * dmax;
    let grid = a4_grid();
    let mut chosen = None;
    for &a4 in &grid {
        let on_rim = (2..=jm).any(|j| {
            let (v, k) = per_order(&s, j, |k| s.ln_w[k] + a4 * s.d2[k]);
            v.is_finite() && crate::math::sqrt(s.d2[k]) > rim
        });
        if !on_rim {
            chosen = Some(a4);
            break;
        }
    }
    let a4_saturated = chosen.is_none();
    let a4 = chosen.unwrap_or(*grid.last().expect("nonempty grid"));
    let offset = |k: usize| s.ln_w[k] + a4 * s.d2[k];
    let alpha: Vec<f64> = (0..=jm).map(|j| per_order(&s, j, offset).0).collect();
    let mut a3_by_order = vec![f64::NAN; jm + 1];
    let mut run = f64::NEG_INFINITY;
    for j in 2..=jm {
        run = run.max(alpha[j]);
        a3_by_order[j] = exp(run).max(A3_FLOOR);
    }
    let growth_ratio = if jm >= 6 { Some(a3_by_order[jm] / a3_by_order[jm - 4]) } else { None };
    let feasible = growth_ratio.map_or(true, |r| r <= INFEASIBILITY_GROWTH);
    // orders 0 and 1 only raise A3 after the fit
    let a3 = exp(run.max(alpha[0]).max(alpha[1])).max(A3_FLOOR);
    let tail_slope = {
        let lo = jm.div_ceil(2).max(2);
        let pts: Vec<(f64, f64)> = (lo..=jm)
            .map(|j| (j as f64, (j as f64 + 1.0) * alpha[j]))
            .filter(|p| p.1.is_finite())
            .collect();
        if pts.len() >= 2 {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            Some(sxy / sxx)
        } else {
            None
        }
    };
    let mut rep = BoundFitReport {
        kind: BoundKind::Criterion,
        a1: 1.0,
        a2: 0.0,
        a3,
        a4,
        mu: model.entropy_mu(),
        feasible,
        residuals: Vec::new(),
        a3_by_order,
        growth_ratio,
        tail_slope,
        a4_saturated,
    };
    rep.residuals = residual_rows(series, &s, &rep);
    Ok(rep)
}

/// Check every sampled `(j, x)` of `series` against a report by direct substitution.
pub fn recheck(series: &TimeTaylorSeries, model: &SolitonModel, p: &Point, rep: &BoundFitReport) -> Result<bool> {
    let s = collect(series, model, p)?;
    for j in 0..=series.order() {
        for k in 0..s.nodes.len() {
            let r = rep.ln_rhs(j, s.ln_w[k], s.d2[k]);
            if s.ln_a[j][k] > r + 1e-12 * (1.0 + abs(r)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone)]
pub struct ReconstructionReport {
    /// `evaluate_series(t) - u(., t)` at every node
    pub error: Vec<f64>,
    pub mask: Vec<bool>,
    pub sup_error: f64,
    pub truncation_bound: f64,
}

pub fn reconstruct_and_compare(u: &HeatTrajectory, series: &TimeTaylorSeries, t: f64) -> Result<ReconstructionReport> {
    if !u.grid.same_as(&series.grid) {
        return Err(Error::validation("trajectory and series live on different grids"));
    }
    let snap = u
        .snapshot_at(t)
        .ok_or_else(|| Error::validation(format!("trajectory has no snapshot at t={t}")))?;
    let ev = evaluate_series(series, t - series.center);
    let error: Vec<f64> = ev.field.values.iter().zip(snap).map(|(a, b)| a - b).collect();
    let sup_error = error
        .iter()
        .zip(&series.mask)
        .filter(|(_, m)| **m)
        .fold(0.0f64, |m, (e, _)| m.max(abs(*e)));
    Ok(ReconstructionReport { error, mask: series.mask.clone(), sup_error, truncation_bound: ev.truncation_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ClosedForm;
    use crate::discrete::{Grid, LaplaceBeltrami, SpectralFilter, Stencil, Topology};
    use crate::heat::{time_taylor_coefficients, time_taylor_coefficients_with, TaylorOptions};
    use crate::math::{PI, E};
    use alloc::sync::Arc;

    fn periodic() -> Arc<Grid> {
        let m = SolitonModel::gaussian(1).unwrap();
        Grid::build(&m, Topology::PeriodicLine { period: 2.0 * PI, spacing: 2.0 * PI / 128.0 }).unwrap()
    }

    fn sin_series(order: usize) -> TimeTaylorSeries {
        let g = periodic();
        let op = LaplaceBeltrami::with_stencil(g.clone(), Stencil::Spectral).unwrap();
        let opts = TaylorOptions { filter: Some(SpectralFilter::default()), ..Default::default() };
        time_taylor_coefficients_with(&op, &ClosedForm::Sin.sample(&g), order, opts).unwrap()
    }

    #[test]
    fn sine_growth_envelope() {
        let g = periodic();
        let times = HeatTrajectory::uniform_times(-2.0, 0.0, 0.05).unwrap();
        let tr = HeatTrajectory::from_closed_form(&g, &ClosedForm::Sin, &times).unwrap();
        let env = growth_classify(&tr, &Point::new(vec![0.0])).unwrap();
        assert_eq!(env.a2, 0.0);
        assert!(env.a1 <= E * E * 1.001);
        let one = HeatTrajectory::from_closed_form(&g, &ClosedForm::Constant(1.0), &times).unwrap();
        let env = growth_classify(&one, &Point::new(vec![0.0])).unwrap();
        assert_eq!((env.a1, env.a2), (1.0, 0.0));
        let zero = HeatTrajectory::from_closed_form(&g, &ClosedForm::Constant(0.0), &times).unwrap();
        assert!(growth_classify(&zero, &Point::new(vec![0.0])).unwrap().trivial);
    }

    #[test]
    fn sine_coefficient_bound() {
        let s = sin_series(12);
        let m = SolitonModel::gaussian(1).unwrap();
        let p = Point::new(vec![0.0]);
        let env = GrowthEnvelope { a1: 1.0, a2: 0.0, p: p.clone(), trivial: false };
        let rep = verify_coefficient_bound(&s, &m, &p, &env).unwrap();
        assert!(rep.feasible && rep.a3 <= 1.0 + 1e-9);
        assert!(recheck(&s, &m, &p, &rep).unwrap());
    }

    #[test]
    fn sine_criterion() {
        let m = SolitonModel::gaussian(1).unwrap();
        let p = Point::new(vec![0.0]);
        let r8 = criterion_check(&sin_series(8), &m, &p).unwrap();
        let r12 = criterion_check(&sin_series(12), &m, &p).unwrap();
        assert!(r8.feasible && r12.feasible);
        assert_eq!(r12.a4, 0.0);
        assert!(r12.a3 <= 2.0);
        assert!((r12.a3 / r8.a3 - 1.0).abs() <= 0.15);
        assert!(recheck(&sin_series(12), &m, &p, &r12).unwrap());
    }

    #[test]
    fn polynomial_criterion_and_zero_series() {
        let m = SolitonModel::gaussian(1).unwrap();
        let g = Grid::build(&m, Topology::TruncatedLine { half_length: 4.0, spacing: 0.25 }).unwrap();
        let op = LaplaceBeltrami::new(g.clone());
        let p = Point::new(vec![0.0]);
        let s = time_taylor_coefficients(&op, &ClosedForm::Polynomial(vec![0.0, 0.0, 1.0]).sample(&g), 8).unwrap();
        assert!(criterion_check(&s, &m, &p).unwrap().feasible);
        let z = time_taylor_coefficients(&op, &ClosedForm::Constant(0.0).sample(&g), 8).unwrap();
        let env = GrowthEnvelope { a1: A1_FLOOR, a2: 0.0, p: p.clone(), trivial: true };
        let rep = verify_coefficient_bound(&z, &m, &p, &env).unwrap();
        assert!(rep.feasible);
        assert_eq!(rep.a3, A3_FLOOR);
    }
}
