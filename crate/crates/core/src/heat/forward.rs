use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::ClosedForm;
use crate::discrete::{Grid, GridField, LaplaceBeltrami};
use crate::error::{Error, Result};
use crate::linalg::conjugate_gradient;
use crate::math::{abs, round};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Explicit { dt: f64 },
    CrankNicolson { dt: f64 },
    /// Samples of a closed-form solution rather than a time stepper.
    ClosedForm,
}

impl Scheme {
    pub fn dt(&self) -> Option<f64> {
        match *self {
            Scheme::Explicit { dt } | Scheme::CrankNicolson { dt } => Some(dt),
            Scheme::ClosedForm => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Explicit { .. } => "explicit",
            Scheme::CrankNicolson { .. } => "crank-nicolson",
            Scheme::ClosedForm => "closed-form",
        }
    }
}

/// Snapshots `u(., t_k)` at increasing times.
#[derive(Debug, Clone)]
pub struct HeatTrajectory {
    pub grid: Arc<Grid>,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub scheme: Scheme,
}

impl HeatTrajectory {
    pub fn new(grid: Arc<Grid>, times: Vec<f64>, snapshots: Vec<Vec<f64>>, scheme: Scheme) -> Result<Self> {
        if times.is_empty() || times.len() != snapshots.len() {
            return Err(Error::validation("trajectory needs one snapshot per time"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("trajectory times must increase strictly"));
        }
        if snapshots.iter().any(|s| s.len() != grid.len()) {
            return Err(Error::validation("snapshot length does not match the grid"));
        }
        Ok(Self { grid, times, snapshots, scheme })
    }

    /// Closed-form solution sampled at `times` on the chart coordinate `x`.
    pub fn from_closed_form(grid: &Arc<Grid>, data: &ClosedForm, times: &[f64]) -> Result<Self> {
        let snapshots = times
            .iter()
            .map(|&t| grid.points().iter().map(|p| data.solution(p.coords[0], t)).collect())
            .collect();
        Self::new(grid.clone(), times.to_vec(), snapshots, Scheme::ClosedForm)
    }

    /// Uniform times `t0, t0+dt, ..., t1` (inclusive).
    pub fn uniform_times(t0: f64, t1: f64, dt: f64) -> Result<Vec<f64>> {
        let steps = step_count(t1 - t0, dt)?;
        Ok((0..=steps).map(|k| t0 + k as f64 * dt).collect())
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    /// Index of the snapshot at time `t`, if one lies within a small tolerance.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let span = (self.end() - self.start()).max(1.0);
        let tol = 1e-9 * span;
        self.times.iter().position(|&s| abs(s - t) <= tol)
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&[f64]> {
        self.index_of(t).map(|i| self.snapshots[i].as_slice())
    }

    pub fn terminal(&self) -> GridField {
        GridField { grid: self.grid.clone(), values: self.snapshots.last().expect("nonempty").clone() }
    }
}

fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::validation(format!("time step must be > 0, got {dt}")));
    }
    if !(duration > 0.0) {
        return Err(Error::validation("integration interval must have positive length"));
    }
    let q = duration / dt;
    let n = round(q);
    if n < 1.0 || abs(q - n) > 1e-8 * n {
        return Err(Error::validation(format!("dt={dt} does not divide the interval {duration}")));
    }
    Ok(n as usize)
}

/// Largest stable explicit step, `2 / max_i sum_j |A_ij|`.
pub fn explicit_stability_limit(op: &LaplaceBeltrami) -> f64 {
    2.0 / op.gershgorin_bound()
}

pub fn solve_forward(op: &LaplaceBeltrami, a: &GridField, t_final: f64, scheme: Scheme) -> Result<HeatTrajectory> {
    solve_forward_from(op, a, 0.0, t_final, scheme, 1)
}

/// March from `t0` to `t1`, recording every `stride`-th step (and the last one).
pub fn solve_forward_from(
    op: &LaplaceBeltrami,
    a: &GridField,
    t0: f64,
    t1: f64,
    scheme: Scheme,
    stride: usize,
) -> Result<HeatTrajectory> {
    op.check_len(&a.values)?;
    if !a.is_finite() {
        return Err(Error::validation("initial data is not finite"));
    }
    let dt = scheme
        .dt()
        .ok_or_else(|| Error::validation("closed-form scheme cannot be time stepped"))?;
    let steps = step_count(t1 - t0, dt)?;
    let stride = stride.max(1);
    let n = a.values.len();
    let grid = op.grid().clone();
    let mut u = a.values.clone();
    let mut times = vec![t0];
    let mut snaps = vec![u.clone()];
    let mut au = vec![0.0; n];
    match scheme {
        Scheme::Explicit { dt } => {
            let limit = explicit_stability_limit(op);
            if dt > limit * (1.0 + 1e-12) {
                return Err(Error::validation(format!(
                    "explicit step dt={dt} exceeds the stability limit {limit}"
                )));
            }
            for k in 1..=steps {
                op.apply(&u, &mut au);
                for (v, d) in u.iter_mut().zip(&au) {
                    *v += dt * d;
                }
                record(&mut times, &mut snaps, &u, t0, dt, k, steps, stride)?;
            }
        }
        Scheme::CrankNicolson { dt } => {
            let diag: Vec<f64> = op.diagonal().iter().map(|d| 1.0 - 0.5 * dt * d).collect();
            let w = grid.weights();
            let mut rhs = vec![0.0; n];
            let apply_m = |x: &[f64], out: &mut [f64]| {
                op.apply(x, out);
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = xi - 0.5 * dt * *o;
                }
            };
            for k in 1..=steps {
                op.apply(&u, &mut au);
                for i in 0..n {
                    rhs[i] = u[i] + 0.5 * dt * au[i];
                }
                let st = conjugate_gradient(apply_m, &diag, w, &rhs, &mut u, 1e-14, 2000);
                if st.relative_residual > 1e-10 {
                    return Err(Error::numerical(format!(
                        "Crank-Nicolson solve stalled at step {k} (residual {:e})",
                        st.relative_residual
                    )));
                }
                record(&mut times, &mut snaps, &u, t0, dt, k, steps, stride)?;
            }
        }
        Scheme::ClosedForm => unreachable!(),
    }
    HeatTrajectory::new(grid, times, snaps, scheme)
}

#[allow(clippy::too_many_arguments)]
fn record(
    times: &mut Vec<f64>,
    snaps: &mut Vec<Vec<f64>>,
    u: &[f64],
    t0: f64,
    dt: f64,
    k: usize,
    steps: usize,
    stride: usize,
) -> Result<()> {
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical(format!("non-finite values at step {k}")));
    }
    if k % stride == 0 || k == steps {
        times.push(t0 + k as f64 * dt);
        snaps.push(u.to_vec());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::Topology;
    use crate::math::{exp, PI};
    use crate::soliton::SolitonModel;

    fn periodic(n: usize) -> Arc<Grid> {
        let m = SolitonModel::gaussian(1).unwrap();
        Grid::build(&m, Topology::PeriodicLine { period: 2.0 * PI, spacing: 2.0 * PI / n as f64 }).unwrap()
    }

    #[test]
    fn crank_nicolson_decays_sine() {
        let g = periodic(128);
        let op = LaplaceBeltrami::new(g.clone());
        let a = ClosedForm::Sin.sample(&g);
        let tr = solve_forward(&op, &a, 0.5, Scheme::CrankNicolson { dt: 1e-3 }).unwrap();
        let end = tr.terminal();
        for (p, v) in g.points().iter().zip(&end.values) {
            assert!((v - exp(-0.5) * p.coords[0].sin()).abs() < 1e-3);
        }
    }

    #[test]
    fn constants_are_equilibria() {
        let g = periodic(32);
        let op = LaplaceBeltrami::new(g.clone());
        let a = GridField::constant(g, 1.0);
        for s in [Scheme::CrankNicolson { dt: 0.01 }, Scheme::Explicit { dt: 1e-3 }] {
            let tr = solve_forward(&op, &a, 0.1, s).unwrap();
            assert!(tr.terminal().values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn explicit_stability_is_enforced() {
        let g = periodic(64);
        let op = LaplaceBeltrami::new(g.clone());
        let h = g.spacing();
        assert!((explicit_stability_limit(&op) - 0.5 * h * h).abs() < 1e-15);
        let a = ClosedForm::Sin.sample(&g);
        let dt = 0.6 * h * h;
        let t = 100.0 * dt;
        assert!(matches!(solve_forward(&op, &a, t, Scheme::Explicit { dt }), Err(Error::Validation(_))));
    }

    #[test]
    fn dt_must_divide_interval() {
        let g = periodic(16);
        let op = LaplaceBeltrami::new(g.clone());
        let a = GridField::constant(g, 0.0);
        assert!(solve_forward(&op, &a, 0.25, Scheme::CrankNicolson { dt: 0.1 }).is_err());
    }
}
