//! Local Sobolev inequality `(int u^{2n/(n-2)})^{(n-2)/n} <= C e^{-2 mu/n} int (4|grad u|^2 + R u^2)`.

use alloc::vec::Vec;

use crate::discrete::{Grid, GridField, LaplaceBeltrami};
use crate::error::{Error, Result};
use crate::math::{exp, powf};
use crate::soliton::Point;

/// `exp(1 - 1/(1 - (d/rho)^2))` inside `B_center(rho)`, zero outside.
pub fn bump(grid: &alloc::sync::Arc<Grid>, center: &Point, rho: f64) -> GridField {
    let model = grid.model().clone();
    GridField::from_fn(grid.clone(), |q| {
        let z = model.distance_unchecked(center, q) / rho;
        if z < 1.0 {
            exp(1.0 - 1.0 / (1.0 - z * z))
        } else {
            0.0
        }
    })
}

#[derive(Debug, Clone)]
pub struct SobolevReport {
    pub lhs: Vec<f64>,
    pub rhs_core: Vec<f64>,
    /// per test function, `0` for `u = 0`
    pub ratios: Vec<f64>,
    /// empirical lower bound for the constant
    pub max_ratio: f64,
}

impl SobolevReport {
    pub fn pass(&self) -> bool {
        self.max_ratio.is_finite()
            && self
                .lhs
                .iter()
                .zip(&self.rhs_core)
                .all(|(l, r)| *l <= self.max_ratio * r * (1.0 + 1e-12) + f64::MIN_POSITIVE)
    }
}

/// Each test function must vanish outside `B_p(r)`.
pub fn sobolev_check(op: &LaplaceBeltrami, p: &Point, r: f64, tests: &[GridField]) -> Result<SobolevReport> {
    let grid = op.grid();
    let model = grid.model();
    let n = model.dim();
    if n <= 2 {
        return Err(Error::unsupported(alloc::format!(
            "the Sobolev exponent 2n/(n-2) is degenerate for n = {n}"
        )));
    }
    model.validate_point(p)?;
    let nf = n as f64;
    let q = 2.0 * nf / (nf - 2.0);
    let w = grid.weights();
    let tol = 1e-12 * r.max(1.0);
    let outside: Vec<bool> = grid.points().iter().map(|x| model.distance_unchecked(p, x) > r + tol).collect();
    let curv: Vec<f64> = grid.points().iter().map(|x| model.scalar_curvature(x)).collect();
    let pref = exp(-2.0 * model.entropy_mu() / nf);
    let (mut lhs, mut rhs_core, mut ratios) = (Vec::new(), Vec::new(), Vec::new());
    for (t, u) in tests.iter().enumerate() {
        if !u.grid.same_as(grid) {
            return Err(Error::validation("test function lives on a different grid"));
        }
        if u.values.iter().zip(&outside).any(|(v, o)| *o && *v != 0.0) {
            return Err(Error::validation(alloc::format!("test function {t} is not supported in the ball")));
        }
        let norm: f64 = u.values.iter().zip(w).map(|(v, wi)| wi * powf(v.abs(), q)).sum();
        let l = powf(norm, (nf - 2.0) / nf);
        let potential: f64 = u.values.iter().zip(w).zip(&curv).map(|((v, wi), c)| wi * c * v * v).sum();
        let rc = pref * (4.0 * op.energy(&u.values) + potential);
        ratios.push(if l == 0.0 { 0.0 } else { l / rc });
        lhs.push(l);
        rhs_core.push(rc);
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(SobolevReport { lhs, rhs_core, ratios, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::Topology;
    use crate::soliton::SolitonModel;

    fn setup() -> (LaplaceBeltrami, Point) {
        let m = SolitonModel::cylinder(2, 3).unwrap();
        let g = Grid::build(
            &m,
            Topology::CylinderProduct { polar: 16, azimuthal: 32, axial_half_length: 2.0, axial_spacing: 0.25 },
        )
        .unwrap();
        (LaplaceBeltrami::new(g), m.minimizer())
    }

    #[test]
    fn ratio_is_scale_free() {
        let (op, p) = setup();
        let u = bump(op.grid(), &p, 0.9);
        let mut cu = u.clone();
        cu.values.iter_mut().for_each(|v| *v *= 3.25);
        let zero = GridField::constant(op.grid().clone(), 0.0);
        let rep = sobolev_check(&op, &p, 1.0, &[u, cu, zero]).unwrap();
        assert!(rep.ratios[0] > 0.0 && rep.ratios[0].is_finite());
        assert!(((rep.ratios[0] - rep.ratios[1]) / rep.ratios[0]).abs() < 1e-12);
        assert_eq!(rep.ratios[2], 0.0);
        assert!(rep.pass());
    }

    #[test]
    fn support_and_dimension_errors() {
        let (op, p) = setup();
        let wide = bump(op.grid(), &p, 1.5);
        assert!(matches!(sobolev_check(&op, &p, 1.0, &[wide]), Err(Error::Validation(_))));
        let m = SolitonModel::gaussian(1).unwrap();
        let g = Grid::build(&m, Topology::TruncatedLine { half_length: 2.0, spacing: 0.25 }).unwrap();
        let line = LaplaceBeltrami::new(g);
        assert!(matches!(sobolev_check(&line, &Point::new(alloc::vec![0.0]), 1.0, &[]), Err(Error::Unsupported(_))));
    }
}
