//! Space-time quadrature over `B_p(rho) x [t0, t1]` on trajectory snapshots.
//!
//! On line grids both directions integrate the piecewise-linear interpolant exactly over the
//! region; other grids fall back to nodal weights on the ball indicator.

use alloc::vec;
use alloc::vec::Vec;

use crate::discrete::{Grid, Shape};
use crate::error::{Error, Result};
use crate::heat::HeatTrajectory;
use crate::math::{ln, log_sum_exp};
use crate::soliton::Point;

/// `B_center(radius) x [t0, t1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeRegion {
    pub center: Point,
    pub radius: f64,
    pub t0: f64,
    pub t1: f64,
}

impl SpaceTimeRegion {
    pub fn new(center: Point, radius: f64, t0: f64, t1: f64) -> Result<Self> {
        if !(radius >= 0.0) || !(t1 >= t0) || !radius.is_finite() || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::validation("region needs radius >= 0 and t0 <= t1"));
        }
        Ok(Self { center, radius, t0, t1 })
    }

    /// `|B| * (t1 - t0)` for Euclidean line balls.
    pub fn measure_1d(&self) -> f64 {
        2.0 * self.radius * (self.t1 - self.t0)
    }
}

fn tolerance(nodes: &[f64]) -> f64 {
    let span = nodes.last().copied().unwrap_or(0.0) - nodes.first().copied().unwrap_or(0.0);
    1e-12 * span.max(1.0)
}

/// `(i, w_i)` with `sum w_i f_i` the integral over `[a, b]` of the linear interpolant on sorted `nodes`.
pub fn interval_weights(nodes: &[f64], a: f64, b: f64) -> Result<Vec<(usize, f64)>> {
    let (a, b) = clamp_interval(nodes, a, b)?;
    let mut w = vec![0.0; nodes.len()];
    for (i, c) in nodes.windows(2).enumerate() {
        let (lo, hi) = (a.max(c[0]), b.min(c[1]));
        if hi <= lo {
            continue;
        }
        let len = hi - lo;
        let lam = (0.5 * (lo + hi) - c[0]) / (c[1] - c[0]);
        w[i] += len * (1.0 - lam);
        w[i + 1] += len * lam;
    }
    Ok(w.into_iter().enumerate().filter(|(_, v)| *v > 0.0).collect())
}

/// `(i, len)`: overlap of each cell `[x_i, x_{i+1}]` with `[a, b]`.
pub fn interval_cells(nodes: &[f64], a: f64, b: f64) -> Result<Vec<(usize, f64)>> {
    let (a, b) = clamp_interval(nodes, a, b)?;
    Ok(nodes
        .windows(2)
        .enumerate()
        .filter_map(|(i, c)| {
            let len = b.min(c[1]) - a.max(c[0]);
            (len > 0.0).then_some((i, len))
        })
        .collect())
}

/// Indices of nodes in `[a, b]`, up to rounding.
pub fn interval_nodes(nodes: &[f64], a: f64, b: f64) -> Vec<usize> {
    let tol = tolerance(nodes);
    (0..nodes.len()).filter(|&i| nodes[i] >= a - tol && nodes[i] <= b + tol).collect()
}

fn clamp_interval(nodes: &[f64], a: f64, b: f64) -> Result<(f64, f64)> {
    if nodes.len() < 2 {
        return Err(Error::validation("interval quadrature needs at least two nodes"));
    }
    let tol = tolerance(nodes);
    let (first, last) = (nodes[0], nodes[nodes.len() - 1]);
    if a < first - tol || b > last + tol {
        return Err(Error::validation("region is not covered by the nodes"));
    }
    Ok((a.max(first), b.min(last)))
}

/// Precomputed weights for one region on one trajectory.
#[derive(Debug, Clone)]
pub struct RegionQuadrature {
    pub space: Vec<(usize, f64)>,
    /// line grids only: cell overlaps, for gradients
    pub cells: Vec<(usize, f64)>,
    pub time: Vec<(usize, f64)>,
    pub sup_nodes: Vec<usize>,
    pub sup_times: Vec<usize>,
    spacing: f64,
}

impl RegionQuadrature {
    /// Fails with a validation error when the trajectory does not cover the region.
    pub fn new(traj: &HeatTrajectory, region: &SpaceTimeRegion) -> Result<Self> {
        let grid = &traj.grid;
        let (t0, t1) = (region.t0, region.t1);
        let tol = tolerance(&traj.times);
        if t0 < traj.start() - tol || t1 > traj.end() + tol {
            return Err(Error::validation("trajectory does not cover the time window"));
        }
        let time = if traj.times.len() == 1 {
            if t1 > t0 {
                return Err(Error::validation("trajectory does not cover the time window"));
            }
            Vec::new()
        } else {
            interval_weights(&traj.times, t0, t1)?
        };
        let sup_times = interval_nodes(&traj.times, t0, t1);
        let (space, cells, sup_nodes) = space_weights(grid, &region.center, region.radius)?;
        if sup_nodes.is_empty() || sup_times.is_empty() {
            return Err(Error::validation("region contains no grid samples"));
        }
        Ok(Self { space, cells, time, sup_nodes, sup_times, spacing: grid.spacing() })
    }

    /// Space-time measure of the region as seen by the weights.
    pub fn measure(&self) -> f64 {
        let s: f64 = self.space.iter().map(|(_, w)| w).sum();
        let t: f64 = self.time.iter().map(|(_, w)| w).sum();
        s * t
    }

    pub fn integral(&self, traj: &HeatTrajectory, f: impl Fn(f64) -> f64) -> f64 {
        self.time
            .iter()
            .map(|&(k, wt)| {
                let u = &traj.snapshots[k];
                wt * self.space.iter().map(|&(i, w)| w * f(u[i])).sum::<f64>()
            })
            .sum()
    }

    /// `ln` of the integral of `exp(ln_f(u))`, for integrands that overflow.
    pub fn ln_integral(&self, traj: &HeatTrajectory, ln_f: impl Fn(f64) -> f64) -> f64 {
        let mut terms = Vec::with_capacity(self.time.len() * self.space.len());
        for &(k, wt) in &self.time {
            let u = &traj.snapshots[k];
            for &(i, w) in &self.space {
                terms.push(ln(wt * w) + ln_f(u[i]));
            }
        }
        log_sum_exp(terms.iter().copied())
    }

    /// `int |du/dx|^2` of the linear interpolant; line grids only.
    pub fn gradient_sq_integral(&self, traj: &HeatTrajectory) -> Result<f64> {
        if !matches!(traj.grid.shape(), Shape::Line { .. }) {
            return Err(Error::unsupported("gradient integrals are implemented on line grids"));
        }
        let h = self.spacing;
        Ok(self
            .time
            .iter()
            .map(|&(k, wt)| {
                let u = &traj.snapshots[k];
                wt * self
                    .cells
                    .iter()
                    .map(|&(i, len)| {
                        let g = (u[i + 1] - u[i]) / h;
                        len * g * g
                    })
                    .sum::<f64>()
            })
            .sum())
    }

    pub fn sup(&self, traj: &HeatTrajectory, f: impl Fn(f64) -> f64) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for &k in &self.sup_times {
            for &i in &self.sup_nodes {
                m = m.max(f(traj.snapshots[k][i]));
            }
        }
        m
    }

    /// Lowest sampled value of `u`.
    pub fn min_value(&self, traj: &HeatTrajectory) -> f64 {
        -self.sup(traj, |v| -v)
    }
}

type SpaceWeights = (Vec<(usize, f64)>, Vec<(usize, f64)>, Vec<usize>);

fn space_weights(grid: &Grid, center: &Point, radius: f64) -> Result<SpaceWeights> {
    let model = grid.model();
    match grid.shape() {
        Shape::Line { .. } => {
            let xs: Vec<f64> = (0..grid.len()).map(|i| grid.x(i)).collect();
            let c = center.coords[0];
            let (a, b) = (c - radius, c + radius);
            let nodes = interval_nodes(&xs, a, b);
            if radius == 0.0 {
                return Ok((Vec::new(), Vec::new(), nodes));
            }
            Ok((interval_weights(&xs, a, b)?, interval_cells(&xs, a, b)?, nodes))
        }
        Shape::Cylinder { .. } => {
            let tol = 1e-12 * radius.max(1.0);
            let nodes: Vec<usize> = (0..grid.len())
                .filter(|&i| model.distance_unchecked(center, &grid.points()[i]) <= radius + tol)
                .collect();
            let w = grid.weights();
            let space = nodes.iter().map(|&i| (i, w[i])).collect();
            Ok((space, Vec::new(), nodes))
        }
    }
}

/// Nodes within `radius` of `center`.
pub fn ball_nodes(grid: &Grid, center: &Point, radius: f64) -> Vec<usize> {
    let model = grid.model();
    let tol = 1e-12 * radius.max(1.0);
    (0..grid.len())
        .filter(|&i| model.distance_unchecked(center, &grid.points()[i]) <= radius + tol)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolant_weights_are_exact_for_linears() {
        let nodes: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let w = interval_weights(&nodes, 0.23, 0.71).unwrap();
        let total: f64 = w.iter().map(|(_, v)| v).sum();
        assert!((total - 0.48).abs() < 1e-14);
        let lin: f64 = w.iter().map(|(i, v)| v * (2.0 * nodes[*i] + 1.0)).sum();
        let exact = (0.71f64 * 0.71 + 0.71) - (0.23 * 0.23 + 0.23);
        assert!((lin - exact).abs() < 1e-14);
    }

    #[test]
    fn uncovered_interval_is_rejected() {
        let nodes = [0.0, 0.5, 1.0];
        assert!(interval_weights(&nodes, -0.1, 0.5).is_err());
        assert!(interval_weights(&nodes, 0.0, 1.0 + 1e-15).is_ok());
    }
}
