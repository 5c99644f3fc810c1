//! Energy estimates on the nested cube pairs of side `~ 1/sqrt(k)`.

use alloc::vec::Vec;

use super::region::{RegionQuadrature, SpaceTimeRegion};
use crate::error::{Error, Result};
use crate::heat::HeatTrajectory;
use crate::math::{exp, powf, sqrt};
use crate::soliton::Point;

/// Accepted `max_k C2(k) / C2(k_min)` in the localized sweep.
pub const LOCALIZED_GROWTH_LIMIT: f64 = 1.25;

/// `B_p(a / sqrt k) x [s - a/k, s]`.
fn cube(p: &Point, s: f64, k: f64, a: f64) -> SpaceTimeRegion {
    SpaceTimeRegion { center: p.clone(), radius: a / sqrt(k), t0: s - a / k, t1: s }
}

#[derive(Debug, Clone)]
pub struct CaccioppoliRow {
    pub j: usize,
    /// `int |grad u|^2` over the half-step cube `j + 1/2`
    pub lhs: f64,
    /// `k int u^2` over cube `j + 1`
    pub rhs_core: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct CaccioppoliReport {
    pub k: usize,
    pub rows: Vec<CaccioppoliRow>,
    pub max_ratio: f64,
}

impl CaccioppoliReport {
    pub fn pass(&self) -> bool {
        self.max_ratio.is_finite()
            && self.rows.iter().all(|r| r.lhs <= self.max_ratio * r.rhs_core * (1.0 + 1e-12) + f64::MIN_POSITIVE)
    }
}

/// Ratios `int_{Omega2_j} |grad u|^2 / (k int_{Omega1_{j+1}} u^2)` for `j = 0..k`, where
/// `Omega1_j = B(j/sqrt k) x [s - j/k, s]` and `Omega2_j` is the same at `j + 1/2`.
pub fn caccioppoli_check(u: &HeatTrajectory, p: &Point, s: f64, k: usize) -> Result<CaccioppoliReport> {
    if k == 0 {
        return Err(Error::validation("k must be >= 1"));
    }
    let kf = k as f64;
    let mut rows = Vec::with_capacity(k);
    for j in 0..k {
        let inner = RegionQuadrature::new(u, &cube(p, s, kf, j as f64 + 0.5))?;
        let outer = RegionQuadrature::new(u, &cube(p, s, kf, (j + 1) as f64))?;
        let lhs = inner.gradient_sq_integral(u)?;
        let rhs_core = kf * outer.integral(u, |v| v * v);
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs_core };
        rows.push(CaccioppoliRow { j, lhs, rhs_core, ratio });
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(CaccioppoliReport { k, rows, max_ratio })
}

#[derive(Debug, Clone)]
pub struct LocalizedReport {
    pub k: usize,
    /// `sup u^2` over `Q_{1/(2 sqrt k)}`
    pub lhs: f64,
    /// `int u^2` over `Q_{1/sqrt k}`
    pub integral: f64,
    /// `e^-mu k^{n/2+1} (f(p)+1)^{n/2} int u^2`
    pub rhs_core: f64,
    pub c2: f64,
}

/// Fitted `C2` in `sup_{Q_{1/(2 sqrt k)}} u^2 <= C2 e^-mu k^{n/2+1} (f(p)+1)^{n/2} int_{Q_{1/sqrt k}} u^2`.
pub fn localized_estimate_check(u: &HeatTrajectory, p: &Point, s: f64, k: usize) -> Result<LocalizedReport> {
    if k == 0 {
        return Err(Error::validation("k must be >= 1"));
    }
    let model = u.grid.model();
    model.validate_point(p)?;
    let kf = k as f64;
    let rho = 1.0 / sqrt(kf);
    let outer = RegionQuadrature::new(u, &SpaceTimeRegion::new(p.clone(), rho, s - rho * rho, s)?)?;
    let half = 0.5 * rho;
    let inner = RegionQuadrature::new(u, &SpaceTimeRegion::new(p.clone(), half, s - half * half, s)?)?;
    if inner.sup_nodes.len() < 3 || inner.sup_times.len() < 2 {
        return Err(Error::validation(alloc::format!(
            "insufficient grid resolution inside the ball of radius {rho}: {} nodes, {} times in the inner cylinder",
            inner.sup_nodes.len(),
            inner.sup_times.len()
        )));
    }
    let n = model.dim() as f64;
    let lhs = inner.sup(u, |v| v * v);
    let integral = outer.integral(u, |v| v * v);
    let rhs_core = exp(-model.entropy_mu()) * powf(kf, 0.5 * n + 1.0) * powf(model.potential(p) + 1.0, 0.5 * n) * integral;
    let c2 = if lhs == 0.0 { 0.0 } else { lhs / rhs_core };
    Ok(LocalizedReport { k, lhs, integral, rhs_core, c2 })
}

#[derive(Debug, Clone)]
pub struct LocalizedSweep {
    pub reports: Vec<LocalizedReport>,
    /// `max C2(k) / C2(first k)`
    pub growth: f64,
}

impl LocalizedSweep {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.c2.is_finite()) && self.growth <= LOCALIZED_GROWTH_LIMIT
    }
}

pub fn localized_sweep(u: &HeatTrajectory, p: &Point, s: f64, ks: &[usize]) -> Result<LocalizedSweep> {
    if ks.is_empty() {
        return Err(Error::validation("sweep needs at least one k"));
    }
    let reports = ks
        .iter()
        .map(|&k| localized_estimate_check(u, p, s, k))
        .collect::<Result<Vec<_>>>()?;
    let base = reports[0].c2;
    let growth = if base > 0.0 {
        reports.iter().map(|r| r.c2 / base).fold(0.0, f64::max)
    } else if reports.iter().all(|r| r.c2 == 0.0) {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(LocalizedSweep { reports, growth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ClosedForm;
    use crate::discrete::{Grid, Topology};
    use crate::soliton::SolitonModel;
    use alloc::vec;

    fn trajectory(data: &ClosedForm, h: f64, dt: f64) -> HeatTrajectory {
        let m = SolitonModel::gaussian(1).unwrap();
        let g = Grid::build(&m, Topology::TruncatedLine { half_length: 3.0, spacing: h }).unwrap();
        let times = HeatTrajectory::uniform_times(-1.0, 0.0, dt).unwrap();
        HeatTrajectory::from_closed_form(&g, data, &times).unwrap()
    }

    #[test]
    fn caccioppoli_against_closed_form() {
        let u = trajectory(&ClosedForm::Sin, 1.0 / 128.0, 1.0 / 1024.0);
        let rep = caccioppoli_check(&u, &Point::new(vec![0.0]), 0.0, 4).unwrap();
        let k = 4.0f64;
        for row in &rep.rows {
            let time = |a: f64| (exp(2.0 * a / k) - 1.0) / 2.0;
            let (a2, a1) = (row.j as f64 + 0.5, row.j as f64 + 1.0);
            let (r2, r1) = (a2 / sqrt(k), a1 / sqrt(k));
            let grad = time(a2) * (r2 + libm::sin(2.0 * r2) / 2.0);
            let mass = time(a1) * (r1 - libm::sin(2.0 * r1) / 2.0);
            let exact = grad / (k * mass);
            assert!(((row.ratio - exact) / exact).abs() < 1e-3, "{} vs {exact}", row.ratio);
        }
        assert!(rep.pass());
        let c = trajectory(&ClosedForm::Constant(2.0), 0.125, 0.0625);
        assert_eq!(caccioppoli_check(&c, &Point::new(vec![0.0]), 0.0, 4).unwrap().max_ratio, 0.0);
    }

    #[test]
    fn localized_constant_oracle() {
        let u = trajectory(&ClosedForm::Constant(1.0), 1.0 / 64.0, 1.0 / 1024.0);
        let p = Point::new(vec![0.5]);
        let sweep = localized_sweep(&u, &p, 0.0, &[1, 4, 16]).unwrap();
        let exact = 1.0 / (2.0 * sqrt(0.0625 + 1.0));
        for r in &sweep.reports {
            assert!((r.c2 - exact).abs() < 1e-12);
        }
        assert!(sweep.pass());
        let zero = trajectory(&ClosedForm::Constant(0.0), 1.0 / 64.0, 1.0 / 1024.0);
        assert_eq!(localized_estimate_check(&zero, &p, 0.0, 4).unwrap().c2, 0.0);
    }

    #[test]
    fn coarse_grids_are_rejected() {
        let u = trajectory(&ClosedForm::Sin, 0.25, 1.0 / 1024.0);
        assert!(matches!(
            localized_estimate_check(&u, &Point::new(vec![0.0]), 0.0, 16),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn uncovered_window_is_rejected() {
        let u = trajectory(&ClosedForm::Sin, 0.125, 0.0625);
        assert!(matches!(caccioppoli_check(&u, &Point::new(vec![0.0]), 0.0, 1), Ok(_)));
        assert!(matches!(caccioppoli_check(&u, &Point::new(vec![0.0]), 0.5, 1), Err(Error::Validation(_))));
    }
}
