use alloc::format;

use super::series::{
    check_order, evaluate_series, time_taylor_coefficients_with, TaylorOptions, TimeTaylorSeries,
};
use crate::analyticity::{criterion_check, BoundFitReport};
use crate::discrete::{GridField, LaplaceBeltrami};
use crate::error::{Error, Result};
use crate::soliton::Point;

#[derive(Debug, Clone)]
pub struct BackwardOptions {
    pub order: usize,
    pub taylor: TaylorOptions,
    /// solve even when the criterion fit or the radius check fails
    pub override_criterion: bool,
    /// base point of the criterion fit; the model minimiser when `None`
    pub base_point: Option<Point>,
}

impl Default for BackwardOptions {
    fn default() -> Self {
        Self {
            order: super::series::DEFAULT_ORDER,
            taylor: TaylorOptions::default(),
            override_criterion: false,
            base_point: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BackwardSolution {
    /// `u(., -t)` solving `(Delta + d/dt) u = 0` with `u(., 0) = a`
    pub field: GridField,
    pub truncation_bound: f64,
    pub series: TimeTaylorSeries,
    pub criterion: BoundFitReport,
}

/// `sum_j Delta^j a (-t)^j / j!`, guarded by the criterion fit.
pub fn solve_backward(op: &LaplaceBeltrami, a: &GridField, t: f64, opts: &BackwardOptions) -> Result<BackwardSolution> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::validation(format!("backward time must be > 0, got {t}")));
    }
    check_order(opts.order)?;
    let series = time_taylor_coefficients_with(op, a, opts.order, opts.taylor)?;
    let model = op.grid().model();
    let p = opts.base_point.clone().unwrap_or_else(|| model.minimizer());
    let criterion = criterion_check(&series, model, &p)?;
    if !opts.override_criterion {
        if !criterion.feasible {
            return Err(Error::criterion(
                "coefficient growth violates the solvability criterion; pass the override to solve anyway",
            ));
        }
        if t >= series.radius.delta {
            return Err(Error::criterion(format!(
                "t={t} is beyond the estimated radius {}",
                series.radius.delta
            )));
        }
    }
    let ev = evaluate_series(&series, -t);
    if !ev.reliable {
        return Err(Error::numerical("series truncation bound is unreliable at this t"));
    }
    Ok(BackwardSolution { field: ev.field, truncation_bound: ev.truncation_bound, series, criterion })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ClosedForm;
    use crate::discrete::{Grid, SpectralFilter, Stencil, Topology};
    use crate::heat::{solve_forward, Scheme};
    use crate::math::PI;
    use crate::soliton::SolitonModel;

    #[test]
    fn sine_round_trip() {
        let m = SolitonModel::gaussian(1).unwrap();
        let g = Grid::build(&m, Topology::PeriodicLine { period: 2.0 * PI, spacing: 2.0 * PI / 128.0 }).unwrap();
        let op = LaplaceBeltrami::with_stencil(g.clone(), Stencil::Spectral).unwrap();
        let a = ClosedForm::Sin.sample(&g);
        let opts = BackwardOptions {
            taylor: TaylorOptions { filter: Some(SpectralFilter::default()), ..Default::default() },
            ..Default::default()
        };
        let b = solve_backward(&op, &a, 0.5, &opts).unwrap();
        for (p, v) in g.points().iter().zip(&b.field.values) {
            assert!((v - 0.5f64.exp() * p.coords[0].sin()).abs() < 1e-6);
        }
        let fwd = solve_forward(&op, &b.field, 0.5, Scheme::CrankNicolson { dt: 1e-3 }).unwrap();
        let err = fwd.terminal().values.iter().zip(&a.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4);
    }

    #[test]
    fn constants_and_bad_times() {
        let m = SolitonModel::gaussian(1).unwrap();
        let g = Grid::build(&m, Topology::TruncatedLine { half_length: 8.0, spacing: 0.25 }).unwrap();
        let op = LaplaceBeltrami::new(g.clone());
        let a = GridField::constant(g, 1.0);
        let b = solve_backward(&op, &a, 3.0, &BackwardOptions::default()).unwrap();
        assert!(b.field.values.iter().all(|v| *v == 1.0));
        assert!(solve_backward(&op, &a, -1.0, &BackwardOptions::default()).is_err());
    }
}
