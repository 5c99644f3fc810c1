//! Closed-form gradient shrinking solitons: the Gaussian shrinker on `R^n`
//! and the round cylinders `S^k(sqrt(2(k-1))) x R^(n-k)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::math::{abs, asin, atan2, cos, exp, ln, powi, sin, sqrt, PI};
use crate::quadrature::{gauss_hermite, gauss_legendre, unit_ball_volume, unit_sphere_area};

/// Nodes per axis used for the entropy integral unless overridden.
pub const DEFAULT_ENTROPY_RESOLUTION: usize = 24;
const MAX_TENSOR_POINTS: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Gaussian,
    Cylinder { k: usize },
}

/// A point in the model's chart.
///
/// Gaussian: Cartesian coordinates. Cylinder `S^k x R^(n-k)`: `k-1` polar angles
/// in `[0, pi]`, one azimuth in `[0, 2 pi)`, then `n-k` axial coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonModel {
    kind: ModelKind,
    n: usize,
    entropy_mu: f64,
    entropy_self_check: f64,
    quadrature_resolution: usize,
}

impl SolitonModel {
    pub fn gaussian(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::validation("gaussian model needs n >= 1"));
        }
        Self::build(ModelKind::Gaussian, n, DEFAULT_ENTROPY_RESOLUTION)
    }

    pub fn cylinder(k: usize, n: usize) -> Result<Self> {
        if k < 2 || k >= n {
            return Err(Error::validation(format!(
                "cylinder needs 2 <= k <= n-1, got k={k}, n={n}"
            )));
        }
        Self::build(ModelKind::Cylinder { k }, n, DEFAULT_ENTROPY_RESOLUTION)
    }

    /// Recompute the entropy with `resolution` nodes per quadrature axis.
    pub fn with_quadrature(self, resolution: usize) -> Result<Self> {
        if resolution < 4 {
            return Err(Error::validation("quadrature resolution must be >= 4"));
        }
        Self::build(self.kind, self.n, resolution)
    }

    fn build(kind: ModelKind, n: usize, resolution: usize) -> Result<Self> {
        let mut model = Self {
            kind,
            n,
            entropy_mu: 0.0,
            entropy_self_check: 0.0,
            quadrature_resolution: resolution,
        };
        let coarse = model.entropy_quadrature(resolution);
        let fine = model.entropy_quadrature(2 * resolution);
        if !coarse.is_finite() || !fine.is_finite() {
            return Err(Error::numerical("entropy quadrature is not finite"));
        }
        model.entropy_mu = fine;
        model.entropy_self_check = abs(fine - coarse);
        Ok(model)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entropy_mu(&self) -> f64 {
        self.entropy_mu
    }

    /// `|mu(N) - mu(2N)|` from construction.
    pub fn entropy_self_check(&self) -> f64 {
        self.entropy_self_check
    }

    pub fn quadrature_resolution(&self) -> usize {
        self.quadrature_resolution
    }

    /// `C(g) = R + |grad f|^2 - f`, evaluated at the minimizer.
    pub fn normalization_constant(&self) -> f64 {
        let p = self.minimizer();
        self.scalar_curvature(&p) + self.grad_potential_sq(&p) - self.potential(&p)
    }

    pub fn sphere_dim(&self) -> usize {
        match self.kind {
            ModelKind::Gaussian => 0,
            ModelKind::Cylinder { k } => k,
        }
    }

    pub fn axial_dim(&self) -> usize {
        self.n - self.sphere_dim()
    }

    /// Radius of the sphere factor, `sqrt(2(k-1))`.
    pub fn sphere_radius(&self) -> Option<f64> {
        match self.kind {
            ModelKind::Gaussian => None,
            ModelKind::Cylinder { k } => Some(sqrt(2.0 * (k as f64 - 1.0))),
        }
    }

    fn axial<'a>(&self, p: &'a Point) -> &'a [f64] {
        &p.coords[self.sphere_dim()..]
    }

    pub fn validate_point(&self, p: &Point) -> Result<()> {
        if p.dim() != self.n {
            return Err(Error::validation(format!(
                "point has {} coordinates, model dimension is {}",
                p.dim(),
                self.n
            )));
        }
        if p.coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation("point has non-finite coordinates"));
        }
        if let ModelKind::Cylinder { k } = self.kind {
            for (i, &a) in p.coords[..k].iter().enumerate() {
                let ok = if i + 1 < k {
                    (0.0..=PI).contains(&a)
                } else {
                    (0.0..2.0 * PI).contains(&a)
                };
                if !ok {
                    return Err(Error::validation(format!(
                        "sphere angle {i} = {a} outside its canonical range"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The potential `f`.
    pub fn potential(&self, p: &Point) -> f64 {
        let y2: f64 = self.axial(p).iter().map(|y| y * y).sum();
        0.25 * y2 + 0.5 * self.sphere_dim() as f64
    }

    pub fn grad_potential_sq(&self, p: &Point) -> f64 {
        self.axial(p).iter().map(|y| (0.5 * y) * (0.5 * y)).sum()
    }

    pub fn scalar_curvature(&self, _p: &Point) -> f64 {
        match self.kind {
            ModelKind::Gaussian => 0.0,
            ModelKind::Cylinder { k } => {
                let rs2 = 2.0 * (k as f64 - 1.0);
                k as f64 * (k as f64 - 1.0) / rs2
            }
        }
    }

    /// `Ric + Hess f - g/2` in an orthonormal frame adapted to the product, row-major.
    pub fn soliton_tensor(&self, _p: &Point) -> Vec<f64> {
        let n = self.n;
        let k = self.sphere_dim();
        let mut t = vec![0.0; n * n];
        let sectional = match self.sphere_radius() {
            Some(rs) => 1.0 / (rs * rs),
            None => 0.0,
        };
        for i in 0..n {
            let (ric, hess) = if i < k {
                // f is constant along the sphere factor
                ((k as f64 - 1.0) * sectional, 0.0)
            } else {
                (0.0, 0.5)
            };
            t[i * n + i] = ric + hess - 0.5;
        }
        t
    }

    /// Point where `f` attains its infimum.
    pub fn minimizer(&self) -> Point {
        let mut c = vec![0.0; self.n];
        if let ModelKind::Cylinder { k } = self.kind {
            for a in c.iter_mut().take(k - 1) {
                *a = 0.5 * PI;
            }
        }
        Point::new(c)
    }

    /// Map `u` in `[0,1)^n` to a chart point, axial coordinates in `[-extent, extent]`.
    pub fn point_from_unit(&self, u: &[f64], extent: f64) -> Point {
        let k = self.sphere_dim();
        let mut c = Vec::with_capacity(self.n);
        for (i, &ui) in u.iter().enumerate().take(self.n) {
            let v = if i + 1 < k {
                // uniform in cos(theta) keeps samples area-distributed
                let z = 1.0 - 2.0 * ui;
                libm::acos(z.clamp(-1.0, 1.0))
            } else if i + 1 == k {
                let a = 2.0 * PI * ui;
                if a >= 2.0 * PI {
                    0.0
                } else {
                    a
                }
            } else {
                extent * (2.0 * ui - 1.0)
            };
            c.push(v);
        }
        Point::new(c)
    }

    /// Unit vector in `R^(k+1)` for the sphere part of `p`.
    fn sphere_embedding(&self, p: &Point) -> Vec<f64> {
        let k = self.sphere_dim();
        let mut e = vec![0.0; k + 1];
        let mut prod = 1.0;
        for i in 0..k - 1 {
            let th = p.coords[i];
            e[i] = prod * cos(th);
            prod *= sin(th);
        }
        let phi = p.coords[k - 1];
        e[k - 1] = prod * cos(phi);
        e[k] = prod * sin(phi);
        e
    }

    fn sphere_distance(&self, a: &Point, b: &Point) -> f64 {
        let ea = self.sphere_embedding(a);
        let eb = self.sphere_embedding(b);
        let mut dm = 0.0;
        let mut dp = 0.0;
        for (x, y) in ea.iter().zip(&eb) {
            dm += (x - y) * (x - y);
            dp += (x + y) * (x + y);
        }
        let rs = self.sphere_radius().unwrap_or(0.0);
        rs * 2.0 * atan2(sqrt(dm), sqrt(dp))
    }

    /// Geodesic distance without chart validation.
    pub fn distance_unchecked(&self, a: &Point, b: &Point) -> f64 {
        let ya = self.axial(a);
        let yb = self.axial(b);
        let axial: f64 = ya.iter().zip(yb).map(|(x, y)| (x - y) * (x - y)).sum();
        match self.kind {
            ModelKind::Gaussian => sqrt(axial),
            ModelKind::Cylinder { .. } => {
                let ds = self.sphere_distance(a, b);
                sqrt(ds * ds + axial)
            }
        }
    }

    pub fn geodesic_distance(&self, a: &Point, b: &Point) -> Result<f64> {
        self.validate_point(a)?;
        self.validate_point(b)?;
        Ok(self.distance_unchecked(a, b))
    }

    /// Riemannian volume of `B_p(r)`.
    pub fn ball_volume(&self, p: &Point, r: f64) -> Result<f64> {
        self.validate_point(p)?;
        if r <= 0.0 || !r.is_finite() {
            return Err(Error::validation(format!("ball radius must be > 0, got {r}")));
        }
        match self.kind {
            ModelKind::Gaussian => Ok(unit_ball_volume(self.n) * powi(r, self.n as i32)),
            ModelKind::Cylinder { k } => {
                let rs = self.sphere_radius().unwrap_or(1.0);
                let m = self.n - k;
                let reach = r.min(PI * rs);
                let phi_max = if reach >= r { 0.5 * PI } else { asin(reach / r) };
                let rule = gauss_legendre(96, 0.0, phi_max);
                let area = unit_sphere_area(k);
                let omega = unit_ball_volume(m);
                let mut vol = 0.0;
                for (phi, w) in rule.nodes.iter().zip(&rule.weights) {
                    let rho = r * sin(*phi);
                    let c = r * cos(*phi);
                    let shell = area * powi(rs * sin(rho / rs), k as i32 - 1);
                    vol += w * shell * omega * powi(c, m as i32) * c;
                }
                Ok(vol)
            }
        }
    }

    /// `ln of integral (4 pi)^(-n/2) e^(-f) dv`, using `resolution` nodes per axis.
    pub fn entropy_quadrature(&self, resolution: usize) -> f64 {
        let k = self.sphere_dim();
        let m = self.axial_dim();
        let sphere_axes = k;
        let total_axes = (m + sphere_axes).max(1);
        let mut res = resolution.max(2);
        while libm::pow(res as f64, total_axes as f64) > MAX_TENSOR_POINTS as f64 && res > 8 {
            res -= 1;
        }
        let gh = gauss_hermite(res);
        let gl = gauss_legendre(res, 0.0, PI);
        let n_phi = 2 * res;
        let rs = self.sphere_radius().unwrap_or(1.0);

        // axis lists: (node, weight, jacobian-exponent) for the sphere polar axes
        let mut idx = vec![0usize; total_axes];
        let sizes: Vec<usize> = (0..total_axes)
            .map(|a| {
                if a + 1 < k {
                    res
                } else if a + 1 == k {
                    n_phi
                } else {
                    res
                }
            })
            .collect();
        let norm = -0.5 * self.n as f64 * ln(4.0 * PI);
        let mut coords = vec![0.0; self.n];
        let mut acc = 0.0;
        loop {
            let mut weight = 1.0;
            let mut gh_shift = 0.0;
            for a in 0..self.n {
                let i = idx[a];
                if a + 1 < k {
                    let th = gl.nodes[i];
                    coords[a] = th;
                    weight *= gl.weights[i] * powi(sin(th), (k - 1 - a) as i32);
                } else if a + 1 == k {
                    coords[a] = (i as f64 + 0.5) * 2.0 * PI / n_phi as f64;
                    weight *= 2.0 * PI / n_phi as f64;
                } else {
                    let z = gh.nodes[i];
                    coords[a] = 2.0 * z;
                    weight *= 2.0 * gh.weights[i];
                    gh_shift += z * z;
                }
            }
            let p = Point::new(coords.clone());
            let f = self.potential(&p);
            acc += weight * exp(norm - f + gh_shift);
            // odometer
            let mut a = 0;
            loop {
                if a == total_axes {
                    let sphere_factor = powi(rs, k as i32);
                    return ln(acc * sphere_factor);
                }
                idx[a] += 1;
                if idx[a] < sizes[a] {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
        }
    }
}

impl fmt::Display for SolitonModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModelKind::Gaussian => write!(f, "gaussian:{}", self.n),
            ModelKind::Cylinder { k } => write!(f, "cylinder:{}x{}", k, self.n),
        }
    }
}

impl FromStr for SolitonModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::validation(format!("unrecognised model spec `{s}`"));
        let (family, rest) = s.split_once(':').ok_or_else(bad)?;
        match family.trim() {
            "gaussian" => {
                let n: usize = rest.trim().parse().map_err(|_| bad())?;
                SolitonModel::gaussian(n)
            }
            "cylinder" => {
                let (k, n) = rest.split_once('x').ok_or_else(bad)?;
                let k: usize = k.trim().parse().map_err(|_| bad())?;
                let n: usize = n.trim().parse().map_err(|_| bad())?;
                SolitonModel::cylinder(k, n)
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub samples: usize,
    /// max over samples of the largest entry of `Ric + Hess f - g/2`
    pub tensor_residual: f64,
    /// max over samples of `|R + |grad f|^2 - f|`
    pub normalization_residual: f64,
    pub min_scalar_curvature: f64,
}

pub fn check_soliton_identities(model: &SolitonModel, samples: &[Point]) -> Result<IdentityReport> {
    if samples.is_empty() {
        return Err(Error::validation("sample list is empty"));
    }
    let mut rep = IdentityReport {
        samples: samples.len(),
        tensor_residual: 0.0,
        normalization_residual: 0.0,
        min_scalar_curvature: f64::INFINITY,
    };
    for p in samples {
        model.validate_point(p)?;
        let t = model.soliton_tensor(p);
        let tr = t.iter().fold(0.0f64, |m, v| m.max(abs(*v)));
        let r = model.scalar_curvature(p);
        let nr = abs(r + model.grad_potential_sq(p) - model.potential(p));
        rep.tensor_residual = rep.tensor_residual.max(tr);
        rep.normalization_residual = rep.normalization_residual.max(nr);
        rep.min_scalar_curvature = rep.min_scalar_curvature.min(r);
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub index: usize,
    pub which: String,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialBoundsReport {
    pub samples: usize,
    pub violations: Vec<BoundViolation>,
    /// smallest `f(x) - lower(x)`
    pub lower_slack: f64,
    /// smallest `upper(x) - f(x)`
    pub upper_slack: f64,
    /// smallest `upper(x) - R(x)`
    pub curvature_slack: f64,
    pub inf_f: f64,
    pub inf_f_ok: bool,
}

impl PotentialBoundsReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty() && self.inf_f_ok
    }
}

/// Two-sided quadratic bounds on `f` around `p`, the matching upper bound on `R`,
/// and `inf f <= n/2`.
pub fn potential_bounds_check(
    model: &SolitonModel,
    p: &Point,
    samples: &[Point],
) -> Result<PotentialBoundsReport> {
    model.validate_point(p)?;
    let n = model.dim() as f64;
    let sfp = 2.0 * sqrt(model.potential(p));
    let tol = 1e-12;
    let mut rep = PotentialBoundsReport {
        samples: samples.len(),
        violations: Vec::new(),
        lower_slack: f64::INFINITY,
        upper_slack: f64::INFINITY,
        curvature_slack: f64::INFINITY,
        inf_f: 0.0,
        inf_f_ok: false,
    };
    for (i, x) in samples.iter().enumerate() {
        model.validate_point(x)?;
        let d = model.distance_unchecked(x, p);
        let fx = model.potential(x);
        let rx = model.scalar_curvature(x);
        let lo_base = (d - sfp - 4.0 * n + 4.0 / 3.0).max(0.0);
        let lower = 0.25 * lo_base * lo_base;
        let upper = 0.25 * (d + sfp) * (d + sfp);
        let scale = tol * (1.0 + upper);
        rep.lower_slack = rep.lower_slack.min(fx - lower);
        rep.upper_slack = rep.upper_slack.min(upper - fx);
        rep.curvature_slack = rep.curvature_slack.min(upper - rx);
        if fx < lower - scale {
            rep.violations.push(BoundViolation { index: i, which: "f_lower".into(), value: fx, bound: lower });
        }
        if fx > upper + scale {
            rep.violations.push(BoundViolation { index: i, which: "f_upper".into(), value: fx, bound: upper });
        }
        if rx > upper + scale {
            rep.violations.push(BoundViolation { index: i, which: "R_upper".into(), value: rx, bound: upper });
        }
        if rx < -tol {
            rep.violations.push(BoundViolation { index: i, which: "R_nonnegative".into(), value: rx, bound: 0.0 });
        }
    }
    rep.inf_f = model.potential(&model.minimizer());
    rep.inf_f_ok = rep.inf_f <= 0.5 * n + tol;
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeGrowthFit {
    /// smallest `C` with `|B_p(r)| <= C e^(f(p)) r^n` on every sample
    pub constant: f64,
    pub ratios: Vec<f64>,
}

pub fn fit_volume_growth(model: &SolitonModel, samples: &[(Point, f64)]) -> Result<VolumeGrowthFit> {
    if samples.is_empty() {
        return Err(Error::validation("sample list is empty"));
    }
    let n = model.dim() as i32;
    let mut ratios = Vec::with_capacity(samples.len());
    for (p, r) in samples {
        let v = model.ball_volume(p, *r)?;
        ratios.push(v / (exp(model.potential(p)) * powi(*r, n)));
    }
    let constant = ratios.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(VolumeGrowthFit { constant, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_closed_forms() {
        let g1 = SolitonModel::gaussian(1).unwrap();
        assert_eq!(g1.potential(&Point::new(vec![2.0])), 1.0);
        let g3 = SolitonModel::gaussian(3).unwrap();
        assert_eq!(g3.scalar_curvature(&Point::new(vec![1.0, 2.0, 3.0])), 0.0);
        let g2 = SolitonModel::gaussian(2).unwrap();
        assert!(g2.entropy_mu().abs() < 1e-8);
        assert!(SolitonModel::gaussian(0).is_err());
    }

    #[test]
    fn cylinder_closed_forms() {
        let c = SolitonModel::cylinder(2, 3).unwrap();
        let p = Point::new(vec![1.0, 2.0, 0.0]);
        assert!((c.scalar_curvature(&p) - 1.0).abs() < 1e-15);
        assert!((c.potential(&p) - 1.0).abs() < 1e-15);
        assert!((c.entropy_mu() - (2f64.ln() - 1.0)).abs() < 1e-6);
        assert!(SolitonModel::cylinder(1, 3).is_err());
        assert!(SolitonModel::cylinder(3, 3).is_err());
        assert!(c.normalization_constant().abs() < 1e-15);
    }

    #[test]
    fn distances() {
        let g2 = SolitonModel::gaussian(2).unwrap();
        let d = g2
            .geodesic_distance(&Point::new(vec![0.0, 0.0]), &Point::new(vec![3.0, 4.0]))
            .unwrap();
        assert_eq!(d, 5.0);
        let c = SolitonModel::cylinder(2, 3).unwrap();
        let a = Point::new(vec![0.0, 0.0, 0.7]);
        let b = Point::new(vec![PI, 0.0, 0.7]);
        assert_eq!(c.geodesic_distance(&a, &a).unwrap(), 0.0);
        let d = c.geodesic_distance(&a, &b).unwrap();
        assert!((d - PI * 2f64.sqrt()).abs() < 1e-12);
        assert!(c.geodesic_distance(&Point::new(vec![4.0, 0.0, 0.0]), &a).is_err());
    }

    #[test]
    fn ball_volumes() {
        let g2 = SolitonModel::gaussian(2).unwrap();
        let o = Point::new(vec![0.0, 0.0]);
        assert!((g2.ball_volume(&o, 1.0).unwrap() - PI).abs() < 1e-6);
        let g1 = SolitonModel::gaussian(1).unwrap();
        assert!((g1.ball_volume(&Point::new(vec![0.0]), 2.0).unwrap() - 4.0).abs() < 1e-8);
        let c = SolitonModel::cylinder(2, 3).unwrap();
        let p = c.minimizer();
        let v = c.ball_volume(&p, 0.1).unwrap();
        let e = 4.0 / 3.0 * PI * 1e-3;
        assert!(((v - e) / e).abs() < 0.02);
        assert!(g1.ball_volume(&Point::new(vec![0.0]), 0.0).is_err());
    }

    #[test]
    fn cylinder_ball_saturates_sphere() {
        // beyond the antipode the ball covers the whole sphere: 8 pi * axial length
        let c = SolitonModel::cylinder(2, 3).unwrap();
        let p = c.minimizer();
        let r = 50.0;
        let v = c.ball_volume(&p, r).unwrap();
        let rs = 2f64.sqrt();
        assert!(v < 4.0 * PI * rs * rs * 2.0 * r);
        assert!(v > 4.0 * PI * rs * rs * 2.0 * (r - PI * rs));
    }

    #[test]
    fn potential_bound_examples() {
        let g1 = SolitonModel::gaussian(1).unwrap();
        let s: Vec<Point> = (0..20).map(|i| Point::new(vec![i as f64 - 10.0])).collect();
        assert!(potential_bounds_check(&g1, &Point::new(vec![0.0]), &s).unwrap().holds());
        let c = SolitonModel::cylinder(2, 3).unwrap();
        let r = potential_bounds_check(&c, &c.minimizer(), &[c.minimizer()]).unwrap();
        assert!(r.holds());
        assert_eq!(r.inf_f, 1.0);
        let g2 = SolitonModel::gaussian(2).unwrap();
        let r = potential_bounds_check(&g2, &Point::new(vec![3.0, 0.0]), &[Point::new(vec![0.0, 0.0])])
            .unwrap();
        assert!(r.holds());
    }

    #[test]
    fn parse_specs() {
        let m: SolitonModel = "cylinder:2x3".parse().unwrap();
        assert_eq!(m.kind(), ModelKind::Cylinder { k: 2 });
        assert_eq!(alloc::string::ToString::to_string(&m), "cylinder:2x3");
        assert!("torus:2".parse::<SolitonModel>().is_err());
        assert!("gaussian:x".parse::<SolitonModel>().is_err());
    }
}
