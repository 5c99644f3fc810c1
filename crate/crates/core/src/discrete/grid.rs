use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, cos, round, PI};
use crate::soliton::{ModelKind, Point, SolitonModel};

/// Chart and spacing of a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Topology {
    /// Nodes `-L, -L+h, ..., L` on a one-dimensional model.
    TruncatedLine { half_length: f64, spacing: f64 },
    /// Nodes `0, h, ..., period-h`; an operator test harness, not a shrinker.
    PeriodicLine { period: f64, spacing: f64 },
    /// Cell-centred latitude-longitude grid on `S^2` times axial nodes `-L..L`.
    CylinderProduct {
        polar: usize,
        azimuthal: usize,
        axial_half_length: f64,
        axial_spacing: f64,
    },
}

/// Node layout of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Line { nodes: usize, periodic: bool },
    /// node index = `(i * azimuthal + j) * axial + l`
    Cylinder { polar: usize, azimuthal: usize, axial: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    model: SolitonModel,
    topology: Topology,
    shape: Shape,
    points: Vec<Point>,
    weights: Vec<f64>,
    boundary_distance: Vec<u32>,
}

/// Number of intervals of length `h` in `len`, if `h` divides it.
pub(crate) fn even_division(len: f64, h: f64) -> Result<usize> {
    let q = len / h;
    let m = round(q);
    if m < 1.0 || abs(q - m) > 1e-9 * m.max(1.0) {
        return Err(Error::validation(format!(
            "spacing {h} does not divide the domain length {len}"
        )));
    }
    Ok(m as usize)
}

impl Grid {
    pub fn build(model: &SolitonModel, topology: Topology) -> Result<Arc<Grid>> {
        match topology {
            Topology::TruncatedLine { half_length, spacing } => {
                Self::check_spacing(half_length, spacing)?;
                Self::check_line_model(model)?;
                let cells = even_division(2.0 * half_length, spacing)?;
                let n = cells + 1;
                let mut points = Vec::with_capacity(n);
                let mut weights = Vec::with_capacity(n);
                let mut dist = Vec::with_capacity(n);
                for i in 0..n {
                    let x = -half_length + i as f64 * spacing;
                    points.push(Point::new(alloc::vec![x]));
                    let w = if i == 0 || i == n - 1 { 0.5 * spacing } else { spacing };
                    weights.push(w);
                    dist.push(i.min(n - 1 - i) as u32);
                }
                Ok(Arc::new(Grid {
                    model: model.clone(),
                    topology,
                    shape: Shape::Line { nodes: n, periodic: false },
                    points,
                    weights,
                    boundary_distance: dist,
                }))
            }
            Topology::PeriodicLine { period, spacing } => {
                Self::check_spacing(period, spacing)?;
                Self::check_line_model(model)?;
                let n = even_division(period, spacing)?;
                if n < 4 {
                    return Err(Error::validation("periodic grid needs at least 4 nodes"));
                }
                let h = period / n as f64;
                let points = (0..n).map(|i| Point::new(alloc::vec![i as f64 * h])).collect();
                Ok(Arc::new(Grid {
                    model: model.clone(),
                    topology,
                    shape: Shape::Line { nodes: n, periodic: true },
                    points,
                    weights: alloc::vec![h; n],
                    boundary_distance: alloc::vec![u32::MAX; n],
                }))
            }
            Topology::CylinderProduct {
                polar,
                azimuthal,
                axial_half_length,
                axial_spacing,
            } => {
                Self::check_spacing(axial_half_length, axial_spacing)?;
                if polar < 4 || azimuthal < 4 {
                    return Err(Error::validation("sphere resolution must be at least 4x4"));
                }
                if model.kind() != (ModelKind::Cylinder { k: 2 }) || model.dim() != 3 {
                    return Err(Error::unsupported(
                        "cylinder grids are implemented for cylinder:2x3 only",
                    ));
                }
                let rs = model.sphere_radius().unwrap_or(1.0);
                let nz = even_division(2.0 * axial_half_length, axial_spacing)? + 1;
                let dth = PI / polar as f64;
                let dph = 2.0 * PI / azimuthal as f64;
                let total = polar * azimuthal * nz;
                let mut points = Vec::with_capacity(total);
                let mut weights = Vec::with_capacity(total);
                let mut dist = Vec::with_capacity(total);
                for i in 0..polar {
                    let th = (i as f64 + 0.5) * dth;
                    let cap = rs * rs * dph * (cos(i as f64 * dth) - cos((i + 1) as f64 * dth));
                    for j in 0..azimuthal {
                        let ph = (j as f64 + 0.5) * dph;
                        for l in 0..nz {
                            let z = -axial_half_length + l as f64 * axial_spacing;
                            points.push(Point::new(alloc::vec![th, ph, z]));
                            let wz = if l == 0 || l == nz - 1 {
                                0.5 * axial_spacing
                            } else {
                                axial_spacing
                            };
                            weights.push(cap * wz);
                            dist.push(l.min(nz - 1 - l) as u32);
                        }
                    }
                }
                Ok(Arc::new(Grid {
                    model: model.clone(),
                    topology,
                    shape: Shape::Cylinder { polar, azimuthal, axial: nz },
                    points,
                    weights,
                    boundary_distance: dist,
                }))
            }
        }
    }

    fn check_spacing(len: f64, h: f64) -> Result<()> {
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::validation(format!("domain length must be > 0, got {len}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::validation(format!("spacing must be > 0, got {h}")));
        }
        Ok(())
    }

    fn check_line_model(model: &SolitonModel) -> Result<()> {
        if model.kind() != ModelKind::Gaussian || model.dim() != 1 {
            return Err(Error::unsupported(format!(
                "line topologies need gaussian:1, got {model}"
            )));
        }
        Ok(())
    }

    pub fn model(&self) -> &SolitonModel {
        &self.model
    }
    pub fn topology(&self) -> Topology {
        self.topology
    }
    pub fn shape(&self) -> Shape {
        self.shape
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn points(&self) -> &[Point] {
        &self.points
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Stencil hops from node `i` to the nearest boundary node; `u32::MAX` without boundary.
    pub fn boundary_distance(&self, i: usize) -> u32 {
        self.boundary_distance[i]
    }

    /// Mesh width along the discretised line or axis.
    pub fn spacing(&self) -> f64 {
        match self.topology {
            Topology::TruncatedLine { spacing, .. } => spacing,
            Topology::PeriodicLine { period, .. } => period / self.len() as f64,
            Topology::CylinderProduct { axial_spacing, .. } => axial_spacing,
        }
    }

    /// Nodes still valid after `radius` stencil hops have eaten into the boundary.
    pub fn interior_mask(&self, radius: u32) -> Vec<bool> {
        self.boundary_distance.iter().map(|&d| d >= radius).collect()
    }

    /// Line coordinate of node `i` (first chart coordinate).
    pub fn x(&self, i: usize) -> f64 {
        self.points[i].coords[0]
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        core::ptr::eq(self, other) || self == other
    }
}

/// Values sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::validation(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&Point) -> f64) -> Self {
        let values = grid.points().iter().map(f).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let n = grid.len();
        Self { grid, values: alloc::vec![c; n] }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_same_grid(&self, other: &GridField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::validation("fields live on different grids"))
        }
    }

    /// `max |values|` over nodes where `mask` is true.
    pub fn sup_abs(&self, mask: Option<&[bool]>) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| mask.map_or(true, |m| m[*i]))
            .fold(0.0f64, |m, (_, v)| m.max(abs(*v)))
    }

    /// Volume-weighted inner product.
    pub fn inner(&self, other: &GridField) -> f64 {
        weighted_inner(self.grid.weights(), &self.values, &other.values)
    }
}

pub fn weighted_inner(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_line_layout() {
        let m = SolitonModel::gaussian(1).unwrap();
        let g = Grid::build(&m, Topology::TruncatedLine { half_length: 10.0, spacing: 0.1 }).unwrap();
        assert_eq!(g.len(), 201);
        assert_eq!(g.weights()[0], 0.05);
        assert_eq!(g.weights()[100], 0.1);
        let s: f64 = g.weights().iter().sum();
        assert!((s - 20.0).abs() < 1e-12);
        assert_eq!(g.boundary_distance(0), 0);
        assert_eq!(g.boundary_distance(100), 100);
    }

    #[test]
    fn periodic_layout() {
        let m = SolitonModel::gaussian(1).unwrap();
        let h = 2.0 * PI / 64.0;
        let g = Grid::build(&m, Topology::PeriodicLine { period: 2.0 * PI, spacing: h }).unwrap();
        assert_eq!(g.len(), 64);
        assert!(g.weights().iter().all(|w| (w - h).abs() < 1e-15));
    }

    #[test]
    fn cylinder_weight_sum() {
        let m = SolitonModel::cylinder(2, 3).unwrap();
        let g = Grid::build(
            &m,
            Topology::CylinderProduct {
                polar: 32,
                azimuthal: 64,
                axial_half_length: 8.0,
                axial_spacing: 0.125,
            },
        )
        .unwrap();
        let s: f64 = g.weights().iter().sum();
        let e = 128.0 * PI;
        assert!(((s - e) / e).abs() < 0.01);
    }

    #[test]
    fn degenerate_specs_rejected() {
        let m = SolitonModel::gaussian(1).unwrap();
        assert!(Grid::build(&m, Topology::TruncatedLine { half_length: 0.0, spacing: 0.1 }).is_err());
        assert!(Grid::build(&m, Topology::TruncatedLine { half_length: 1.0, spacing: -0.1 }).is_err());
        assert!(Grid::build(&m, Topology::TruncatedLine { half_length: 1.0, spacing: 0.3 }).is_err());
        let c = SolitonModel::cylinder(2, 3).unwrap();
        let t = Topology::CylinderProduct { polar: 3, azimuthal: 8, axial_half_length: 1.0, axial_spacing: 0.5 };
        assert!(Grid::build(&c, t).is_err());
    }
}
