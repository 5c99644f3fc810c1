//! Grids, the discrete Laplace-Beltrami operator and iterated application.

pub mod extended;
pub mod grid;
pub mod laplacian;
pub mod spectral;

use alloc::vec::Vec;

pub use grid::{Grid, GridField, Shape, Topology};
pub use laplacian::{LaplaceBeltrami, Stencil};
pub use spectral::SpectralFilter;

use crate::error::Result;

/// Output of [`iterate_laplacian`].
#[derive(Debug, Clone)]
pub struct IteratedLaplacian {
    /// `a_0 .. a_J`
    pub fields: Vec<Vec<f64>>,
    /// boundary hops contaminating `fields[j]`
    pub contamination: Vec<u32>,
    /// first `j` whose field is not finite
    pub diverged_at: Option<usize>,
}

impl IteratedLaplacian {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }
}

/// `a_0 = a`, `a_{j+1} = A a_j` (optionally filtered after each application).
pub fn iterate_laplacian(
    op: &LaplaceBeltrami,
    a: &GridField,
    j_max: usize,
    filter: Option<SpectralFilter>,
) -> Result<IteratedLaplacian> {
    op.check_len(&a.values)?;
    if !op.grid().same_as(&a.grid) {
        return Err(crate::Error::validation("field and operator live on different grids"));
    }
    if let Some(f) = filter {
        if !SpectralFilter::supports(op.grid()) {
            let _ = f;
            return Err(crate::Error::unsupported(
                "spectral filtering is implemented for line topologies only",
            ));
        }
    }
    let grid = op.grid().clone();
    let mut fields = Vec::with_capacity(j_max + 1);
    let mut contamination = Vec::with_capacity(j_max + 1);
    fields.push(a.values.clone());
    contamination.push(0);
    let mut diverged_at = if a.is_finite() { None } else { Some(0) };
    for j in 0..j_max {
        if diverged_at.is_some() {
            break;
        }
        let mut next = alloc::vec![0.0; grid.len()];
        op.apply(&fields[j], &mut next);
        if let Some(f) = filter {
            f.apply(&grid, &mut next)?;
        }
        if next.iter().any(|v| !v.is_finite()) {
            diverged_at = Some(j + 1);
        }
        fields.push(next);
        contamination.push((j as u32 + 1) * op.hops());
    }
    Ok(IteratedLaplacian { fields, contamination, diverged_at })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;
    use crate::soliton::SolitonModel;

    #[test]
    fn sine_iterates_spectrally() {
        let m = SolitonModel::gaussian(1).unwrap();
        let g = Grid::build(&m, Topology::PeriodicLine { period: 2.0 * PI, spacing: 2.0 * PI / 256.0 }).unwrap();
        let op = LaplaceBeltrami::with_stencil(g.clone(), Stencil::Spectral).unwrap();
        let a = GridField::from_fn(g, |p| p.coords[0].sin());
        let it = iterate_laplacian(&op, &a, 2, Some(SpectralFilter::default())).unwrap();
        for i in 0..a.values.len() {
            assert!((it.fields[1][i] + a.values[i]).abs() < 1e-10);
            assert!((it.fields[2][i] - a.values[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn constants_and_quadratics() {
        let m = SolitonModel::gaussian(1).unwrap();
        let g = Grid::build(&m, Topology::TruncatedLine { half_length: 3.0, spacing: 0.25 }).unwrap();
        let op = LaplaceBeltrami::new(g.clone());
        let one = GridField::constant(g.clone(), 1.0);
        let it = iterate_laplacian(&op, &one, 5, None).unwrap();
        for f in &it.fields[1..] {
            assert!(f.iter().all(|v| *v == 0.0));
        }
        let x2 = GridField::from_fn(g.clone(), |p| p.coords[0] * p.coords[0]);
        let it = iterate_laplacian(&op, &x2, 2, None).unwrap();
        for i in 0..g.len() {
            if g.boundary_distance(i) >= it.contamination[1] {
                assert!((it.fields[1][i] - 2.0).abs() < 1e-10);
            }
            if g.boundary_distance(i) >= it.contamination[2] {
                assert!(it.fields[2][i].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn divergence_is_flagged() {
        let m = SolitonModel::gaussian(1).unwrap();
        let g = Grid::build(&m, Topology::TruncatedLine { half_length: 1.0, spacing: 1.0 / 64.0 }).unwrap();
        let op = LaplaceBeltrami::new(g.clone());
        let a = GridField::from_fn(g, |p| if p.coords[0] == 0.0 { 1e307 } else { 0.0 });
        let it = iterate_laplacian(&op, &a, 10, None).unwrap();
        assert_eq!(it.diverged_at, Some(1));
    }
}
