//! Rounding-floor filtering in the eigenbasis of the line operators.
//!
//! Repeated application of a stencil multiplies round-off in the top modes by
//! `lambda_max^j`. Zeroing eigen-coefficients below a relative floor stops the
//! amplified noise while leaving resolved content untouched.

use alloc::vec;
use alloc::vec::Vec;

use super::grid::{Grid, Shape};
use crate::error::{Error, Result};
use crate::math::{abs, cos, sin, sqrt, PI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralFilter {
    /// Coefficients with `|c_k| <= relative_floor * max_k |c_k|` are dropped.
    pub relative_floor: f64,
}

impl Default for SpectralFilter {
    fn default() -> Self {
        Self { relative_floor: 1e-10 }
    }
}

impl SpectralFilter {
    pub fn new(relative_floor: f64) -> Result<Self> {
        if !(relative_floor > 0.0 && relative_floor < 1.0) {
            return Err(Error::validation("filter floor must lie in (0, 1)"));
        }
        Ok(Self { relative_floor })
    }

    pub fn supports(grid: &Grid) -> bool {
        matches!(grid.shape(), Shape::Line { .. })
    }

    /// Filter `u` in place in the eigenbasis matching `grid`.
    pub fn apply(&self, grid: &Grid, u: &mut [f64]) -> Result<()> {
        match grid.shape() {
            Shape::Line { periodic: true, .. } => {
                let (mut re, mut im) = dft(u);
                let m = re.iter().zip(&im).map(|(a, b)| sqrt(a * a + b * b)).fold(0.0, f64::max);
                let floor = self.relative_floor * m;
                for k in 0..re.len() {
                    if sqrt(re[k] * re[k] + im[k] * im[k]) <= floor {
                        re[k] = 0.0;
                        im[k] = 0.0;
                    }
                }
                idft(&re, &im, u);
                Ok(())
            }
            Shape::Line { periodic: false, .. } => {
                let mut c = dct1(u);
                let m = c.iter().fold(0.0f64, |a, v| a.max(abs(*v)));
                let floor = self.relative_floor * m;
                for v in c.iter_mut() {
                    if abs(*v) <= floor {
                        *v = 0.0;
                    }
                }
                let back = dct1(&c);
                let scale = 2.0 / (u.len() - 1) as f64;
                for (o, b) in u.iter_mut().zip(back) {
                    *o = scale * b;
                }
                Ok(())
            }
            Shape::Cylinder { .. } => Err(Error::unsupported(
                "spectral filtering is implemented for line topologies only",
            )),
        }
    }
}

fn dft(u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = u.len();
    let (ct, st) = twiddles(n);
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for k in 0..n {
        let (mut a, mut b) = (0.0, 0.0);
        for (j, &x) in u.iter().enumerate() {
            let m = (k * j) % n;
            a += x * ct[m];
            b -= x * st[m];
        }
        re[k] = a;
        im[k] = b;
    }
    (re, im)
}

fn idft(re: &[f64], im: &[f64], out: &mut [f64]) {
    let n = re.len();
    let (ct, st) = twiddles(n);
    for (j, o) in out.iter_mut().enumerate() {
        let mut a = 0.0;
        for k in 0..n {
            let m = (k * j) % n;
            a += re[k] * ct[m] - im[k] * st[m];
        }
        *o = a / n as f64;
    }
}

fn twiddles(n: usize) -> (Vec<f64>, Vec<f64>) {
    let ct = (0..n).map(|m| cos(2.0 * PI * m as f64 / n as f64)).collect();
    let st = (0..n).map(|m| sin(2.0 * PI * m as f64 / n as f64)).collect();
    (ct, st)
}

/// Unnormalised DCT-I; applying it twice multiplies by `(N-1)/2`.
fn dct1(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let p = n - 1;
    let period = 2 * p;
    let table: Vec<f64> = (0..period).map(|m| cos(PI * m as f64 / p as f64)).collect();
    (0..n)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let mut s = 0.5 * (u[0] + sign * u[p]);
            for (i, &x) in u.iter().enumerate().take(p).skip(1) {
                s += x * table[(k * i) % period];
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::grid::Topology;
    use crate::discrete::laplacian::LaplaceBeltrami;
    use crate::soliton::SolitonModel;

    #[test]
    fn transforms_round_trip() {
        let u: Vec<f64> = (0..17).map(|i| ((i * i) as f64 * 0.37).sin()).collect();
        let c = dct1(&u);
        let back = dct1(&c);
        for (a, b) in u.iter().zip(back) {
            assert!((a - b * 2.0 / 16.0).abs() < 1e-13);
        }
        let (re, im) = dft(&u);
        let mut out = vec![0.0; u.len()];
        idft(&re, &im, &mut out);
        for (a, b) in u.iter().zip(&out) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn dct_diagonalises_neumann_line() {
        // cos(pi k i / (N-1)) is an eigenvector of the finite-volume Neumann line
        let m = SolitonModel::gaussian(1).unwrap();
        let g = Grid::build(&m, Topology::TruncatedLine { half_length: 1.0, spacing: 0.125 }).unwrap();
        let op = LaplaceBeltrami::new(g.clone());
        let n = g.len();
        let k = 5.0;
        let v: Vec<f64> = (0..n).map(|i| (PI * k * i as f64 / (n - 1) as f64).cos()).collect();
        let mut av = vec![0.0; n];
        op.apply(&v, &mut av);
        let lam = -(2.0 - 2.0 * (PI * k / (n - 1) as f64).cos()) / (0.125 * 0.125);
        for (a, b) in av.iter().zip(&v) {
            assert!((a - lam * b).abs() < 1e-10);
        }
    }

    #[test]
    fn filter_keeps_resolved_modes() {
        let m = SolitonModel::gaussian(1).unwrap();
        let g = Grid::build(&m, Topology::PeriodicLine { period: 2.0 * PI, spacing: 2.0 * PI / 32.0 }).unwrap();
        let mut u: Vec<f64> = g.points().iter().map(|p| p.coords[0].sin() + 1e-14 * (7.0 * p.coords[0]).cos()).collect();
        SpectralFilter::default().apply(&g, &mut u).unwrap();
        for (p, v) in g.points().iter().zip(&u) {
            assert!((v - p.coords[0].sin()).abs() < 1e-15);
        }
    }
}
