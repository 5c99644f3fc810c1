use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::grid::{Grid, GridField, Shape, Topology};
use crate::error::{Error, Result};
use crate::math::{abs, cos, sin, PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// Second-order central differences / finite volumes.
    #[default]
    Central2,
    /// Trigonometric-interpolant second derivative (periodic lines only).
    Spectral,
}

/// Sparse discrete Laplace-Beltrami operator in CSR layout.
#[derive(Debug, Clone)]
pub struct LaplaceBeltrami {
    grid: Arc<Grid>,
    stencil: Stencil,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

struct Builder {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Builder {
    fn new(n: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        Self { row_ptr, cols: Vec::new(), vals: Vec::new() }
    }
    fn push_row(&mut self, entries: &[(usize, f64)]) {
        for &(c, v) in entries {
            self.cols.push(c);
            self.vals.push(v);
        }
        self.row_ptr.push(self.cols.len());
    }
}

/// Off-diagonal entries for the second difference along a line of `n` nodes.
/// Neumann finite-volume ends keep the operator symmetric in the trapezoid weights.
fn line_neighbours(i: usize, n: usize, periodic: bool, inv_h2: f64) -> ([(usize, f64); 2], usize) {
    if periodic {
        ([((i + n - 1) % n, inv_h2), ((i + 1) % n, inv_h2)], 2)
    } else if i == 0 {
        ([(1, 2.0 * inv_h2), (0, 0.0)], 1)
    } else if i == n - 1 {
        ([(n - 2, 2.0 * inv_h2), (0, 0.0)], 1)
    } else {
        ([(i - 1, inv_h2), (i + 1, inv_h2)], 2)
    }
}

impl LaplaceBeltrami {
    pub fn new(grid: Arc<Grid>) -> Self {
        Self::with_stencil(grid, Stencil::Central2).expect("central stencil exists on every grid")
    }

    pub fn with_stencil(grid: Arc<Grid>, stencil: Stencil) -> Result<Self> {
        let n = grid.len();
        let mut b = Builder::new(n);
        match (grid.shape(), stencil) {
            (Shape::Line { nodes, periodic }, Stencil::Central2) => {
                let h = grid.spacing();
                let inv_h2 = 1.0 / (h * h);
                for i in 0..nodes {
                    let (nb, cnt) = line_neighbours(i, nodes, periodic, inv_h2);
                    let mut row: Vec<(usize, f64)> = nb[..cnt].to_vec();
                    let diag: f64 = -row.iter().map(|e| e.1).sum::<f64>();
                    row.push((i, diag));
                    row.sort_by_key(|e| e.0);
                    b.push_row(&row);
                }
            }
            (Shape::Line { nodes, periodic: true }, Stencil::Spectral) => {
                let period = match grid.topology() {
                    Topology::PeriodicLine { period, .. } => period,
                    _ => unreachable!(),
                };
                let hh = 2.0 * PI / nodes as f64;
                let scale = (2.0 * PI / period) * (2.0 * PI / period);
                let even = nodes % 2 == 0;
                let off: Vec<f64> = (0..nodes)
                    .map(|m| {
                        if m == 0 {
                            return 0.0;
                        }
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        let s = sin(0.5 * m as f64 * hh);
                        let v = if even {
                            -sign / (2.0 * s * s)
                        } else {
                            -sign * cos(0.5 * m as f64 * hh) / (2.0 * s * s)
                        };
                        scale * v
                    })
                    .collect();
                // diagonal from the row sum keeps constants in the kernel to rounding
                let diag = -off.iter().sum::<f64>();
                for i in 0..nodes {
                    let row: Vec<(usize, f64)> = (0..nodes)
                        .map(|j| {
                            let m = (j + nodes - i) % nodes;
                            (j, if m == 0 { diag } else { off[m] })
                        })
                        .collect();
                    b.push_row(&row);
                }
            }
            (Shape::Cylinder { polar, azimuthal, axial }, Stencil::Central2) => {
                let rs = grid.model().sphere_radius().unwrap_or(1.0);
                let dth = PI / polar as f64;
                let dph = 2.0 * PI / azimuthal as f64;
                let h = grid.spacing();
                let inv_h2 = 1.0 / (h * h);
                for i in 0..polar {
                    let th = (i as f64 + 0.5) * dth;
                    let area = rs * rs * dph * (cos(i as f64 * dth) - cos((i + 1) as f64 * dth));
                    let north = sin(i as f64 * dth) * dph / dth / area;
                    let south = sin((i + 1) as f64 * dth) * dph / dth / area;
                    let east = dth / (sin(th) * dph) / area;
                    for j in 0..azimuthal {
                        for l in 0..axial {
                            let idx = |ii: usize, jj: usize, ll: usize| (ii * azimuthal + jj) * axial + ll;
                            let mut row: Vec<(usize, f64)> = Vec::with_capacity(7);
                            // the pole-facing edge of the first and last ring has zero length
                            if i > 0 {
                                row.push((idx(i - 1, j, l), north));
                            }
                            if i + 1 < polar {
                                row.push((idx(i + 1, j, l), south));
                            }
                            row.push((idx(i, (j + azimuthal - 1) % azimuthal, l), east));
                            row.push((idx(i, (j + 1) % azimuthal, l), east));
                            let (nb, cnt) = line_neighbours(l, axial, false, inv_h2);
                            for &(ll, v) in &nb[..cnt] {
                                row.push((idx(i, j, ll), v));
                            }
                            let diag: f64 = -row.iter().map(|e| e.1).sum::<f64>();
                            row.push((idx(i, j, l), diag));
                            row.sort_by_key(|e| e.0);
                            b.push_row(&row);
                        }
                    }
                }
            }
            (_, Stencil::Spectral) => {
                return Err(Error::unsupported(
                    "spectral stencil is available on periodic lines only",
                ))
            }
        }
        Ok(Self { grid, stencil, row_ptr: b.row_ptr, cols: b.cols, vals: b.vals })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    /// Boundary hops consumed by one application.
    pub fn hops(&self) -> u32 {
        1
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.row(i).find(|e| e.0 == i).map_or(0.0, |e| e.1))
            .collect()
    }

    /// `max_i sum_j |A_ij|`.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.row(i).map(|e| abs(e.1)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `out = A u`.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.grid.len());
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * u[self.cols[k]];
            }
            *o = s;
        }
    }

    pub fn apply_field(&self, u: &GridField) -> Result<GridField> {
        if !self.grid.same_as(&u.grid) {
            return Err(Error::validation("field and operator live on different grids"));
        }
        let mut out = vec![0.0; u.values.len()];
        self.apply(&u.values, &mut out);
        Ok(GridField { grid: self.grid.clone(), values: out })
    }

    /// Dirichlet energy `-<A u, u>_w`, which equals the discrete `integral |grad u|^2`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let mut au = vec![0.0; u.len()];
        self.apply(u, &mut au);
        -super::grid::weighted_inner(self.grid.weights(), &au, u)
    }

    pub fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.grid.len() {
            return Err(Error::validation(format!(
                "field has {} values, grid has {} nodes",
                u.len(),
                self.grid.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::SolitonModel;

    fn line(l: f64, h: f64) -> Arc<Grid> {
        let m = SolitonModel::gaussian(1).unwrap();
        Grid::build(&m, Topology::TruncatedLine { half_length: l, spacing: h }).unwrap()
    }

    fn periodic(n: usize) -> Arc<Grid> {
        let m = SolitonModel::gaussian(1).unwrap();
        Grid::build(&m, Topology::PeriodicLine { period: 2.0 * PI, spacing: 2.0 * PI / n as f64 }).unwrap()
    }

    #[test]
    fn quadratic_is_exact() {
        let g = line(2.0, 0.125);
        let op = LaplaceBeltrami::new(g.clone());
        let u = GridField::from_fn(g.clone(), |p| p.coords[0] * p.coords[0]);
        let au = op.apply_field(&u).unwrap();
        for (i, v) in au.values.iter().enumerate() {
            if g.boundary_distance(i) >= 1 {
                assert!((v - 2.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sine_converges_at_second_order() {
        let err = |n: usize| {
            let g = periodic(n);
            let op = LaplaceBeltrami::new(g.clone());
            let u = GridField::from_fn(g, |p| p.coords[0].sin());
            let au = op.apply_field(&u).unwrap();
            au.values
                .iter()
                .zip(&u.values)
                .map(|(a, s)| (a + s).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn spectral_stencil_is_exact_on_low_modes() {
        let g = periodic(64);
        let op = LaplaceBeltrami::with_stencil(g.clone(), Stencil::Spectral).unwrap();
        let u = GridField::from_fn(g, |p| (3.0 * p.coords[0]).cos());
        let au = op.apply_field(&u).unwrap();
        for (a, b) in au.values.iter().zip(&u.values) {
            assert!((a + 9.0 * b).abs() < 1e-10);
        }
        assert!(LaplaceBeltrami::with_stencil(line(1.0, 0.25), Stencil::Spectral).is_err());
    }

    #[test]
    fn sphere_harmonic_eigenvalue() {
        let m = SolitonModel::cylinder(2, 3).unwrap();
        let g = Grid::build(
            &m,
            Topology::CylinderProduct { polar: 32, azimuthal: 16, axial_half_length: 1.0, axial_spacing: 0.5 },
        )
        .unwrap();
        let op = LaplaceBeltrami::new(g.clone());
        let u = GridField::from_fn(g.clone(), |p| p.coords[0].cos());
        let au = op.apply_field(&u).unwrap();
        let err = au.values.iter().zip(&u.values).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        assert!(err < 5e-3, "err {err}");
    }
}
