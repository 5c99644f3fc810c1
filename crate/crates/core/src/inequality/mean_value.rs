//! Mean-value inequality for nonnegative subsolutions and the Moser ladder behind it.

use alloc::vec::Vec;

use super::region::{RegionQuadrature, SpaceTimeRegion};
use super::ParabolicCylinder;
use crate::discrete::Shape;
use crate::error::{Error, Result};
use crate::heat::HeatTrajectory;
use crate::math::{exp, ln, powf, powi};

/// Largest accepted spread `max c_i / min c_i` of the per-step constants.
pub const MOSER_RATIO_LIMIT: f64 = 10.0;
/// Deepest ladder the check will run.
pub const MAX_LEVELS: usize = 6;

/// Smallest `(Delta - d/dt) v + tol` over interior samples of `region`, where `tol` is ten
/// times a Richardson estimate of the stencil error plus a rounding floor. Negative means the
/// samples are not a subsolution. Line grids only.
pub fn subsolution_margin(v: &HeatTrajectory, region: &SpaceTimeRegion) -> Result<f64> {
    let Shape::Line { nodes, .. } = v.grid.shape() else {
        return Err(Error::unsupported("subsolution checks are implemented on line grids"));
    };
    let quad = RegionQuadrature::new(v, region)?;
    let h = v.grid.spacing();
    let t = &v.times;
    let s = &v.snapshots;
    let scale = quad.sup(v, f64::abs);
    let dt_min = t.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let floor = 64.0 * f64::EPSILON * scale * (4.0 / (h * h) + 2.0 / dt_min.min(1.0));
    let mut margin = f64::INFINITY;
    for &k in &quad.sup_times {
        if k == 0 || k + 1 >= t.len() {
            continue;
        }
        for &i in &quad.sup_nodes {
            if i == 0 || i + 1 >= nodes {
                continue;
            }
            let u = &s[k];
            let r1 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h) - (s[k + 1][i] - s[k - 1][i]) / (t[k + 1] - t[k - 1]);
            let err = if i >= 2 && i + 2 < nodes && k >= 2 && k + 2 < t.len() {
                let r2 = (u[i + 2] - 2.0 * u[i] + u[i - 2]) / (4.0 * h * h)
                    - (s[k + 2][i] - s[k - 2][i]) / (t[k + 2] - t[k - 2]);
                (r1 - r2).abs() / 3.0
            } else {
                0.0
            };
            margin = margin.min(r1 + 10.0 * err + floor);
        }
    }
    Ok(margin)
}

#[derive(Debug, Clone)]
pub struct MeanValueReport {
    pub r: f64,
    pub delta: f64,
    pub m: f64,
    /// `sup v^m` over the inner cylinder
    pub lhs: f64,
    /// `int v^m` over the outer cylinder
    pub integral: f64,
    pub rhs_core: f64,
    /// `lhs / rhs_core`, a lower bound for the constant of the estimate
    pub rho: f64,
    pub mu: f64,
    /// `sup R` over the outer ball
    pub r_max: f64,
    pub subsolution_margin: f64,
}

impl MeanValueReport {
    pub fn pass(&self) -> bool {
        self.rho.is_finite() && self.lhs <= self.rho * self.rhs_core * (1.0 + 1e-12) + f64::MIN_POSITIVE
    }
}

struct Prepared {
    outer: RegionQuadrature,
    r_max: f64,
    margin: f64,
}

fn prepare(v: &HeatTrajectory, cyl: &ParabolicCylinder) -> Result<Prepared> {
    let outer_region = cyl.outer();
    let outer = RegionQuadrature::new(v, &outer_region)?;
    let scale = outer.sup(v, f64::abs);
    if outer.min_value(v) < -1e-12 * scale.max(1.0) {
        return Err(Error::validation("subsolution samples are negative beyond rounding"));
    }
    let margin = subsolution_margin(v, &outer_region)?;
    if margin < 0.0 {
        return Err(Error::validation("samples violate the subsolution inequality beyond the stencil error"));
    }
    let model = v.grid.model();
    let r_max = outer
        .sup_nodes
        .iter()
        .map(|&i| model.scalar_curvature(&v.grid.points()[i]))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Prepared { outer, r_max, margin })
}

fn positive_power(u: f64, m: f64) -> f64 {
    if u > 0.0 {
        powf(u, m)
    } else {
        0.0
    }
}

pub fn mean_value_check(v: &HeatTrajectory, cyl: &ParabolicCylinder, m: f64) -> Result<MeanValueReport> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::validation("exponent m must be positive"));
    }
    let prep = prepare(v, cyl)?;
    let inner = RegionQuadrature::new(v, &cyl.inner())?;
    let model = v.grid.model();
    let n = model.dim() as f64;
    let mu = model.entropy_mu();
    let lhs = inner.sup(v, |u| positive_power(u, m));
    let integral = prep.outer.integral(v, |u| positive_power(u, m));
    let geometry = powf(prep.r_max + 1.0, 0.5 * n) / (powf(1.0 - cyl.delta, 2.0 + n) * exp(mu) * powf(cyl.r, 2.0 + n));
    let rhs_core = geometry * integral;
    let rho = if lhs == 0.0 { 0.0 } else { lhs / rhs_core };
    Ok(MeanValueReport {
        r: cyl.r,
        delta: cyl.delta,
        m,
        lhs,
        integral,
        rhs_core,
        rho,
        mu,
        r_max: prep.r_max,
        subsolution_margin: prep.margin,
    })
}

/// Ladder `sigma_i = delta + (1 - delta) 2^-i`, exponents `m theta^i` on `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoserChainConfig {
    pub theta: f64,
    /// number of steps `I`
    pub levels: usize,
    pub m: f64,
}

impl MoserChainConfig {
    pub fn new(n: usize, levels: usize, m: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("dimension must be positive"));
        }
        if levels > MAX_LEVELS {
            return Err(Error::validation(alloc::format!("at most {MAX_LEVELS} Moser levels")));
        }
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::validation("exponent m must be positive"));
        }
        Ok(Self { theta: 1.0 + 2.0 / n as f64, levels, m })
    }

    pub fn sigma(&self, delta: f64, i: usize) -> f64 {
        delta + (1.0 - delta) * powi(0.5, i as i32)
    }

    pub fn exponent(&self, i: usize) -> f64 {
        self.m * powi(self.theta, i as i32)
    }
}

#[derive(Debug, Clone)]
pub struct MoserStep {
    pub i: usize,
    pub sigma_outer: f64,
    pub sigma_inner: f64,
    /// power of `v` integrated on the outer level
    pub exponent: f64,
    /// `ln` of the cylinder average of `v^exponent`
    pub ln_norm_outer: f64,
    pub ln_norm_inner: f64,
    /// `ln E` making `N_{i+1} <= E (kappa^-2 r^-2 N_i)^theta` an equality
    pub ln_fitted_e: f64,
    /// `(N_{i+1}/E_B)^{1/theta} ((1 - delta) r)^2 / N_i`, the step constant with the dyadic
    /// factor `4^{i+1}` taken out; grows like the exponent once `v^exponent` concentrates
    pub power_constant: f64,
    /// `N_{i+1}^{1/q_{i+1}} / N_i^{1/q_i}`: the step gain on norms, i.e. `power_constant^{1/q_i}`
    /// relative to its value for `v = 1`
    pub constant: f64,
}

#[derive(Debug, Clone)]
pub struct MoserChainReport {
    pub steps: Vec<MoserStep>,
    pub levels_requested: usize,
    /// last level whose norm was finite
    pub levels_reached: usize,
    pub truncated: bool,
    pub ln_eb: f64,
    /// `max / min` of the step constants, `1` for an empty chain
    pub spread: f64,
    pub bounded: bool,
    /// every step with its fitted `E` holds when substituted back
    pub steps_hold: bool,
    /// `ln` of the top-level norm rebuilt from level 0 through the step constants
    pub composed_ln_norm: f64,
    pub direct_ln_norm: f64,
    /// `ln sup v^m` over the top level, against `direct_ln_norm / theta^I`
    pub ln_sup_top: f64,
}

pub fn moser_chain_check(v: &HeatTrajectory, cyl: &ParabolicCylinder, cfg: &MoserChainConfig) -> Result<MoserChainReport> {
    let prep = prepare(v, cyl)?;
    let model = v.grid.model();
    let n = model.dim() as f64;
    let ln_eb = -2.0 * model.entropy_mu() / n + ln(prep.r_max + 1.0);
    let delta = cyl.delta;
    let ln_scale = 2.0 * ln((1.0 - delta) * cyl.r);

    let mut norms = Vec::with_capacity(cfg.levels + 1);
    let mut truncated = false;
    let mut ln_sup_top = f64::NEG_INFINITY;
    for i in 0..=cfg.levels {
        let region = cyl.scaled(cfg.sigma(delta, i));
        let quad = RegionQuadrature::new(v, &region)?;
        let q = cfg.exponent(i);
        let ln_int = quad.ln_integral(v, |u| if u > 0.0 { q * ln(u) } else { f64::NEG_INFINITY });
        let ln_avg = ln_int - ln(quad.measure());
        if !ln_avg.is_finite() {
            truncated = true;
            break;
        }
        ln_sup_top = cfg.m * ln(quad.sup(v, |u| u.max(0.0)));
        norms.push(ln_avg);
    }
    let levels_reached = norms.len().saturating_sub(1);

    let theta = cfg.theta;
    let mut steps = Vec::new();
    for i in 0..levels_reached {
        let (a, b) = (norms[i], norms[i + 1]);
        let kappa = cfg.sigma(delta, i) - cfg.sigma(delta, i + 1);
        let ln_kr = 2.0 * ln(kappa * cyl.r);
        steps.push(MoserStep {
            i,
            sigma_outer: cfg.sigma(delta, i),
            sigma_inner: cfg.sigma(delta, i + 1),
            exponent: cfg.exponent(i),
            ln_norm_outer: a,
            ln_norm_inner: b,
            ln_fitted_e: b - theta * (a - ln_kr),
            power_constant: exp((b - ln_eb) / theta + ln_scale - a),
            constant: exp(b / cfg.exponent(i + 1) - a / cfg.exponent(i)),
        });
    }
    let steps_hold = steps.iter().all(|s| {
        let kappa = s.sigma_outer - s.sigma_inner;
        let bound = s.ln_fitted_e + theta * (s.ln_norm_outer - 2.0 * ln(kappa * cyl.r));
        s.ln_norm_inner <= bound + 1e-12 * bound.abs().max(1.0)
    });
    let (lo, hi) = steps
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(s.constant), hi.max(s.constant)));
    let spread = if steps.is_empty() { 1.0 } else { hi / lo };
    let mut composed = norms.first().copied().unwrap_or(f64::NEG_INFINITY);
    for s in &steps {
        composed = ln_eb + theta * (ln(s.power_constant) - ln_scale + composed);
    }
    Ok(MoserChainReport {
        levels_requested: cfg.levels,
        levels_reached,
        truncated,
        ln_eb,
        spread,
        bounded: spread.is_finite() && spread < MOSER_RATIO_LIMIT,
        steps_hold,
        composed_ln_norm: composed,
        direct_ln_norm: norms.last().copied().unwrap_or(f64::NEG_INFINITY),
        ln_sup_top,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ClosedForm;
    use crate::discrete::{Grid, Topology};
    use crate::soliton::{Point, SolitonModel};
    use alloc::vec;

    fn trajectory(data: &ClosedForm, h: f64) -> HeatTrajectory {
        let m = SolitonModel::gaussian(1).unwrap();
        let g = Grid::build(&m, Topology::TruncatedLine { half_length: 3.0, spacing: h }).unwrap();
        let times = HeatTrajectory::uniform_times(-2.5, 0.0, 2.0 * h * h).unwrap();
        HeatTrajectory::from_closed_form(&g, data, &times).unwrap()
    }

    fn vertex(r: f64, delta: f64) -> ParabolicCylinder {
        ParabolicCylinder::new(Point::new(vec![0.0]), 0.0, r, delta).unwrap()
    }

    #[test]
    fn constant_oracle() {
        let v = trajectory(&ClosedForm::Constant(1.0), 0.125);
        let rep = mean_value_check(&v, &vertex(1.0, 0.5), 1.0).unwrap();
        assert!((rep.integral - 2.0).abs() < 1e-12);
        assert!((rep.rho - 0.0625).abs() < 1e-12);
        assert!(rep.pass());
    }

    #[test]
    fn linear_scaling_when_m_is_one() {
        let mut v = trajectory(&ClosedForm::HeatKernel { shift: 3.0 }, 0.125);
        let a = mean_value_check(&v, &vertex(1.5, 0.25), 1.0).unwrap();
        v.snapshots.iter_mut().flatten().for_each(|x| *x *= 7.5);
        let b = mean_value_check(&v, &vertex(1.5, 0.25), 1.0).unwrap();
        assert!(((a.rho - b.rho) / a.rho).abs() < 1e-13);
    }

    #[test]
    fn rejects_negative_and_supersolutions() {
        let v = trajectory(&ClosedForm::Sin, 0.125);
        let c = ParabolicCylinder::new(Point::new(vec![-1.0]), 0.0, 0.5, 0.5).unwrap();
        assert!(matches!(mean_value_check(&v, &c, 1.0), Err(Error::Validation(_))));
        // e^{-x^2}: (Delta - d/dt) v < 0 near x = 0
        let mut w = trajectory(&ClosedForm::Constant(1.0), 0.125);
        let xs: Vec<f64> = w.grid.points().iter().map(|p| p.coords[0]).collect();
        for s in w.snapshots.iter_mut() {
            for (v, x) in s.iter_mut().zip(&xs) {
                *v = exp(-x * x);
            }
        }
        assert!(matches!(mean_value_check(&w, &vertex(1.0, 0.5), 1.0), Err(Error::Validation(_))));
    }

    #[test]
    fn moser_constants_for_constants() {
        let v = trajectory(&ClosedForm::Constant(1.0), 0.125);
        let cfg = MoserChainConfig::new(1, 4, 2.0).unwrap();
        let rep = moser_chain_check(&v, &vertex(1.0, 0.5), &cfg).unwrap();
        assert_eq!(rep.steps.len(), 4);
        assert!(rep.steps.iter().all(|s| (s.constant - 1.0).abs() < 1e-12));
        assert!(rep.bounded && rep.steps_hold);
        assert!((rep.composed_ln_norm - rep.direct_ln_norm).abs() < 1e-9);
        let empty = moser_chain_check(&v, &vertex(1.0, 0.5), &MoserChainConfig::new(1, 0, 1.0).unwrap()).unwrap();
        assert!(empty.steps.is_empty() && empty.bounded);
    }

    #[test]
    fn sigma_ladder_stays_above_delta() {
        let cfg = MoserChainConfig::new(3, 6, 1.0).unwrap();
        let s: Vec<f64> = (0..=6).map(|i| cfg.sigma(0.3, i)).collect();
        assert_eq!(s[0], 1.0);
        assert!(s.windows(2).all(|w| w[1] < w[0] && w[1] > 0.3));
        assert!(MoserChainConfig::new(3, 7, 1.0).is_err());
    }
}
