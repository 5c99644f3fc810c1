//! Acceptance criteria 1 to 12 at desk scale. Criterion 13 (byte-identical reruns of
//! `reproduce-all`) needs the binary and lives in the `acceptance` test target.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use shrinker_core::analyticity::{criterion_check, recheck, reconstruct_and_compare};
use shrinker_core::data::ClosedForm;
use shrinker_core::discrete::{Grid, GridField, LaplaceBeltrami, SpectralFilter, Stencil, Topology};
use shrinker_core::heat::{
    solve_backward, solve_forward, solve_forward_from, time_taylor_coefficients_exact, time_taylor_coefficients_with,
    BackwardOptions, HeatTrajectory, Scheme, TaylorOptions, DEFAULT_DELTA_MAX,
};
use shrinker_core::inequality::{
    bump, mean_value_check, moser_chain_check, sobolev_check, MoserChainConfig, ParabolicCylinder,
};
use shrinker_core::soliton::{check_soliton_identities, fit_volume_growth};
use shrinker_core::tychonov::{profile_series, TychonovTable};
use shrinker_core::{Point, SolitonModel};

use crate::error::{LabError, LabResult};
use crate::experiments::{random_bumps, random_points, small_ball_ratios, squared, volume_samples};
use crate::output::{num, nums};

/// `(id, title, runtime budget in seconds)`.
pub const CRITERIA: &[(u8, &str, f64)] = &[
    (1, "soliton identities", 1.0),
    (2, "entropy", 5.0),
    (3, "backward-series oracle", 5.0),
    (4, "radius estimation", 10.0),
    (5, "Taylor reconstruction", 30.0),
    (6, "coefficient-bound fit", 5.0),
    (7, "criterion sharpness", 30.0),
    (8, "Tychonov verdict", 30.0),
    (9, "mean-value inequality", 60.0),
    (10, "Moser chain", 60.0),
    (11, "Sobolev inequality", 60.0),
    (12, "volume growth", 10.0),
];

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub details: Map<String, Value>,
}

impl Outcome {
    pub fn to_json(&self) -> Value {
        json!({"id": self.id, "title": self.title, "pass": self.pass, "details": self.details})
    }
}

struct Checks {
    pass: bool,
    details: Map<String, Value>,
}

impl Checks {
    fn new() -> Self {
        Self { pass: true, details: Map::new() }
    }

    fn check(&mut self, key: &str, ok: bool, value: Value) {
        self.pass &= ok;
        self.details.insert(key.to_string(), json!({"pass": ok, "value": value}));
    }

    fn note(&mut self, key: &str, value: Value) {
        self.details.insert(key.to_string(), value);
    }
}

pub fn title(id: u8) -> &'static str {
    CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown")
}

pub fn budget(id: u8) -> f64 {
    CRITERIA.iter().find(|c| c.0 == id).map(|c| c.2).unwrap_or(f64::INFINITY)
}

/// Run one criterion; errors become a failed outcome carrying the message.
pub fn run_criterion(id: u8, seed: u64) -> Outcome {
    let res = match id {
        1 => soliton_identities(seed),
        2 => entropy(),
        3 => backward_oracle(),
        4 => radius_estimation(),
        5 => taylor_reconstruction(),
        6 => coefficient_fit(),
        7 => criterion_sharpness(),
        8 => tychonov_verdict(),
        9 => mean_value(),
        10 => moser_chain(),
        11 => sobolev(seed),
        12 => volume_growth(seed),
        _ => Err(LabError::usage(format!("no criterion {id}"))),
    };
    let (pass, details) = match res {
        Ok(c) => (c.pass, c.details),
        Err(e) => {
            let mut d = Map::new();
            d.insert("error".into(), Value::String(e.to_string()));
            (false, d)
        }
    };
    Outcome { id, title: title(id), pass, details }
}

/// Criteria 1..=12 in parallel, reported in order.
pub fn run_all(seed: u64) -> Vec<Outcome> {
    CRITERIA.par_iter().map(|c| run_criterion(c.0, seed)).collect()
}

fn sup_diff(a: &[f64], b: &[f64], mask: Option<&[bool]>) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .filter(|(i, _)| mask.map_or(true, |m| m[*i]))
        .map(|(_, (x, y))| (x - y).abs())
        .fold(0.0, f64::max)
}

fn line(half_length: f64, spacing: f64) -> LabResult<Arc<Grid>> {
    Ok(Grid::build(&SolitonModel::gaussian(1)?, Topology::TruncatedLine { half_length, spacing })?)
}

fn periodic(nodes: usize) -> LabResult<Arc<Grid>> {
    Ok(Grid::build(&SolitonModel::gaussian(1)?, Topology::PeriodicLine { period: 2.0 * PI, spacing: 2.0 * PI / nodes as f64 })?)
}

fn filtered() -> TaylorOptions {
    TaylorOptions { filter: Some(SpectralFilter::default()), ..Default::default() }
}

fn soliton_identities(seed: u64) -> LabResult<Checks> {
    let mut c = Checks::new();
    for m in [SolitonModel::gaussian(3)?, SolitonModel::cylinder(2, 3)?] {
        let pts = random_points(&m, seed, 1000, 10.0);
        let r = check_soliton_identities(&m, &pts)?;
        c.check(&format!("{m} tensor"), r.tensor_residual < 1e-10, num(r.tensor_residual));
        c.check(&format!("{m} normalization"), r.normalization_residual < 1e-12, num(r.normalization_residual));
    }
    Ok(c)
}

fn entropy() -> LabResult<Checks> {
    let mut c = Checks::new();
    for n in 1..=3 {
        let mu = SolitonModel::gaussian(n)?.entropy_mu();
        c.check(&format!("gaussian:{n}"), mu.abs() <= 1e-8, num(mu));
    }
    let mu = SolitonModel::cylinder(2, 3)?.entropy_mu();
    let err = (mu - (2f64.ln() - 1.0)).abs();
    c.check("cylinder:2x3 error", err <= 1e-6, num(err));
    Ok(c)
}

fn backward_oracle() -> LabResult<Checks> {
    let mut c = Checks::new();
    let g = periodic(256)?;
    let op = LaplaceBeltrami::with_stencil(g.clone(), Stencil::Spectral)?;
    let a = ClosedForm::Sin.sample(&g);
    let opts = BackwardOptions { order: 20, taylor: filtered(), ..Default::default() };
    let b = solve_backward(&op, &a, 0.5, &opts)?;
    let exact = ClosedForm::Sin.sample_at(&g, -0.5);
    let err = sup_diff(&b.field.values, &exact.values, None);
    c.check("sup error", err < 1e-6, num(err));
    let fwd = solve_forward(&op, &b.field, 0.5, Scheme::CrankNicolson { dt: 1e-3 })?;
    let rt = sup_diff(&fwd.terminal().values, &a.values, None);
    c.check("round trip", rt < 1e-4, num(rt));
    Ok(c)
}

fn radius_estimation() -> LabResult<Checks> {
    let mut c = Checks::new();
    let (j, h) = (16usize, 0.05);
    // J stencil hops beyond the |x| <= 3 window
    let g = line(3.0 + j as f64 * h, h)?;
    for tau in [0.5, 1.0] {
        let s = time_taylor_coefficients_exact(&g, &ClosedForm::ExpQuadratic { tau }, j, DEFAULT_DELTA_MAX)?;
        let ratio = s.radius.delta / tau;
        c.check(&format!("tau={tau}"), (0.8..=1.25).contains(&ratio), num(ratio));
    }
    Ok(c)
}

fn taylor_reconstruction() -> LabResult<Checks> {
    let mut c = Checks::new();
    let g = line(24.0, 0.05)?;
    let op = LaplaceBeltrami::new(g.clone());
    let k = ClosedForm::HeatKernel { shift: 3.0 };
    let u = solve_forward_from(&op, &k.sample_at(&g, -2.0), -2.0, 0.0, Scheme::CrankNicolson { dt: 1e-3 }, 1)?;
    let s = time_taylor_coefficients_with(&op, &u.terminal(), 20, filtered())?;
    let rec = reconstruct_and_compare(&u, &s, -0.5)?;
    c.check("sup interior error", rec.sup_error < 5e-3, num(rec.sup_error));
    c.note("interior nodes", json!(rec.mask.iter().filter(|m| **m).count()));
    Ok(c)
}

fn sine_series(order: usize) -> LabResult<shrinker_core::heat::TimeTaylorSeries> {
    let g = periodic(256)?;
    let op = LaplaceBeltrami::with_stencil(g.clone(), Stencil::Spectral)?;
    Ok(time_taylor_coefficients_with(&op, &ClosedForm::Sin.sample(&g), order, filtered())?)
}

fn coefficient_fit() -> LabResult<Checks> {
    let mut c = Checks::new();
    let m = SolitonModel::gaussian(1)?;
    let p = m.minimizer();
    let (s8, s12) = (sine_series(8)?, sine_series(12)?);
    let (r8, r12) = (criterion_check(&s8, &m, &p)?, criterion_check(&s12, &m, &p)?);
    c.check("feasible", r8.feasible && r12.feasible, json!([r8.feasible, r12.feasible]));
    c.check("A3 <= 2", r12.a3 <= 2.0, num(r12.a3));
    c.check("A4 = 0", r8.a4 == 0.0 && r12.a4 == 0.0, nums(&[r8.a4, r12.a4]));
    let drift = r12.a3 / r8.a3 - 1.0;
    c.check("A3 drift 8 -> 12", drift.abs() <= 0.15, num(drift));
    c.check("recheck", recheck(&s12, &m, &p, &r12)?, Value::Null);
    Ok(c)
}

fn criterion_sharpness() -> LabResult<Checks> {
    let mut c = Checks::new();
    let m = SolitonModel::gaussian(1)?;
    let p = m.minimizer();
    let g = line(6.0, 0.05)?;
    let mut fired = None;
    let mut ratios = Vec::new();
    for j in [8, 12, 16] {
        let rep = criterion_check(&profile_series(&g, 0.5, 40, j)?, &m, &p)?;
        ratios.push(rep.growth_ratio.unwrap_or(f64::NAN));
        if !rep.feasible && fired.is_none() {
            fired = Some(j);
        }
    }
    c.check("Tychonov profile infeasible by J=16", fired.is_some(), json!({"first_J": fired, "growth_ratios": nums(&ratios)}));
    let sin = criterion_check(&sine_series(16)?, &m, &p)?;
    c.check("sin feasible", sin.feasible, num(sin.a3));
    let gp = line(6.0 + 16.0 * 0.05, 0.05)?;
    for d in [ClosedForm::Polynomial(vec![0.0, 0.0, 1.0]), ClosedForm::Polynomial(vec![1.0, 0.0, 2.0, 0.0, 1.0])] {
        let rep = criterion_check(&time_taylor_coefficients_exact(&gp, &d, 16, DEFAULT_DELTA_MAX)?, &m, &p)?;
        c.check(&format!("{d} feasible"), rep.feasible, num(rep.a3));
    }
    Ok(c)
}

fn tychonov_verdict() -> LabResult<Checks> {
    let mut c = Checks::new();
    let k = 40;
    let table = TychonovTable::new(k);
    let mut past = 0.0f64;
    for i in 0..=120 {
        let x = -6.0 + 0.1 * i as f64;
        for t in [0.0, -1e-3, -0.5, -1.0] {
            past = past.max(table.value(x, t, k).value.abs());
        }
    }
    c.check("v = 0 for t <= 0", past == 0.0, num(past));
    let v = table.value(0.0, 0.5, k).value;
    c.check("v(0, 0.5) - exp(-4)", (v - (-4.0f64).exp()).abs() <= 1e-9, num(v - (-4.0f64).exp()));
    let h = 0.01;
    // two guard nodes each side for the five-point stencils
    let nx = 405;
    let nt = 75;
    let mut vals = vec![vec![0.0; nx]; nt];
    let mut reliable = true;
    for (jt, row) in vals.iter_mut().enumerate() {
        let t = 0.28 + jt as f64 * h;
        for (ix, v) in row.iter_mut().enumerate() {
            let tv = table.value(-2.02 + ix as f64 * h, t, k);
            reliable &= tv.reliable;
            *v = tv.value;
        }
    }
    let (mut second, mut fourth) = (0.0f64, 0.0f64);
    for jt in 2..nt - 2 {
        for ix in 2..nx - 2 {
            let r = &vals[jt];
            let col = |d: isize| vals[(jt as isize + d) as usize][ix];
            let lap2 = (r[ix + 1] - 2.0 * r[ix] + r[ix - 1]) / (h * h);
            let dt2 = (col(1) - col(-1)) / (2.0 * h);
            second = second.max((lap2 - dt2).abs());
            let lap4 = (-r[ix + 2] + 16.0 * r[ix + 1] - 30.0 * r[ix] + 16.0 * r[ix - 1] - r[ix - 2]) / (12.0 * h * h);
            let dt4 = (-col(2) + 8.0 * col(1) - 8.0 * col(-1) + col(-2)) / (12.0 * h);
            fourth = fourth.max((lap4 - dt4).abs());
        }
    }
    c.check("tails reliable", reliable, Value::Null);
    c.check("discrete residual, five-point stencils", fourth < 1e-2, num(fourth));
    c.note("discrete residual, three-point stencils", num(second));
    let worst = (0..=20).map(|j| table.log_abs_derivative(j, 1e-2)).fold(f64::NEG_INFINITY, f64::max);
    c.check("ln max |h^(k)(0.01)|, k <= 20", worst < (1e-100f64).ln(), num(worst));
    Ok(c)
}

/// `{1, (e^{-t} sin x)^2, kernel^2}` on `[-4, 4]` over `[-2.5, 0]` with `dt = 2 h^2`.
fn ensemble(h: f64) -> LabResult<Vec<(&'static str, HeatTrajectory)>> {
    let g = line(4.0, h)?;
    let times = HeatTrajectory::uniform_times(-2.5, 0.0, 2.0 * h * h)?;
    Ok(vec![
        ("one", HeatTrajectory::from_closed_form(&g, &ClosedForm::Constant(1.0), &times)?),
        ("sin^2", squared(&HeatTrajectory::from_closed_form(&g, &ClosedForm::Sin, &times)?)?),
        ("kernel^2", squared(&HeatTrajectory::from_closed_form(&g, &ClosedForm::HeatKernel { shift: 3.0 }, &times)?)?),
    ])
}

const RADII: [f64; 3] = [0.5, 1.0, 1.5];
const DELTAS: [f64; 3] = [0.25, 0.5, 0.75];
const EXPONENTS: [f64; 2] = [1.0, 2.0];

fn vertex() -> Point {
    Point::new(vec![0.0])
}

fn mean_value() -> LabResult<Checks> {
    let mut c = Checks::new();
    let mut maxima = Vec::new();
    let mut finite = true;
    for h in [0.0625, 0.03125] {
        let mut max_rho = 0.0f64;
        for (name, v) in ensemble(h)? {
            for r in RADII {
                for d in DELTAS {
                    for m in EXPONENTS {
                        let rep = mean_value_check(&v, &ParabolicCylinder::new(vertex(), 0.0, r, d)?, m)?;
                        finite &= rep.rho.is_finite() && rep.pass();
                        max_rho = max_rho.max(rep.rho);
                        if name == "one" && r == 1.0 && d == 0.5 && m == 1.0 && h == 0.0625 {
                            c.check("rho(v = 1) - 1/16", (rep.rho - 0.0625).abs() <= 1e-3, num(rep.rho - 0.0625));
                        }
                    }
                }
            }
        }
        maxima.push(max_rho);
    }
    c.check("all rho finite", finite, Value::Null);
    let drift = maxima[1] / maxima[0] - 1.0;
    c.check("max rho drift h -> h/2", drift.abs() <= 0.1, json!({"max_rho": nums(&maxima), "drift": num(drift)}));
    let rejected = ParabolicCylinder::new(vertex(), 0.0, 2.5, 0.5).map_err(LabError::from);
    let code = rejected.as_ref().err().map(|e| e.exit_code());
    c.check("r = 2.5 rejected with exit 2", code == Some(2), json!(code));
    Ok(c)
}

fn moser_chain() -> LabResult<Checks> {
    let mut c = Checks::new();
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut bounded = true;
    let mut reached = usize::MAX;
    for (name, v) in ensemble(0.0625)? {
        for r in RADII {
            for d in DELTAS {
                for m in EXPONENTS {
                    let cfg = MoserChainConfig::new(1, 5, m)?;
                    let rep = moser_chain_check(&v, &ParabolicCylinder::new(vertex(), 0.0, r, d)?, &cfg)?;
                    bounded &= rep.bounded;
                    reached = reached.min(rep.levels_reached);
                    if rep.spread > worst {
                        worst = rep.spread;
                        worst_at = format!("{name} r={r} delta={d} m={m}");
                    }
                }
            }
        }
    }
    c.check("per-step constants max/min < 10", bounded, json!({"worst_spread": num(worst), "at": worst_at}));
    c.check("steps i <= 4 reached", reached >= 5, json!(reached));
    Ok(c)
}

fn sobolev(seed: u64) -> LabResult<Checks> {
    let mut c = Checks::new();
    let m = SolitonModel::cylinder(2, 3)?;
    let p = m.minimizer();
    let bumps = random_bumps(&m, &p, 1.0, 20, seed);
    let mut maxima = Vec::new();
    let mut finite = true;
    let mut scale_dev = 0.0f64;
    for (polar, azimuthal, h) in [(32, 64, 0.125), (64, 128, 0.0625)] {
        let g = Grid::build(&m, Topology::CylinderProduct { polar, azimuthal, axial_half_length: 3.0, axial_spacing: h })?;
        let op = LaplaceBeltrami::new(g.clone());
        let tests: Vec<GridField> = bumps.iter().map(|(q, rho)| bump(&g, q, *rho)).collect();
        let rep = sobolev_check(&op, &p, 1.0, &tests)?;
        finite &= rep.ratios.iter().all(|r| r.is_finite() && *r > 0.0) && rep.pass();
        maxima.push(rep.max_ratio);
        if polar == 32 {
            let scaled = tests
                .iter()
                .map(|f| GridField::new(g.clone(), f.values.iter().map(|v| 3.7 * v).collect()))
                .collect::<Result<Vec<_>, _>>()?;
            let srep = sobolev_check(&op, &p, 1.0, &scaled)?;
            scale_dev = rep.ratios.iter().zip(&srep.ratios).map(|(a, b)| (b / a - 1.0).abs()).fold(0.0, f64::max);
        }
    }
    c.check("ratios finite", finite, Value::Null);
    let drift = maxima[1] / maxima[0] - 1.0;
    c.check("max ratio drift", drift.abs() <= 0.1, json!({"max_ratio": nums(&maxima), "drift": num(drift)}));
    c.check("scale invariance", scale_dev <= 1e-12, num(scale_dev));
    Ok(c)
}

fn volume_growth(seed: u64) -> LabResult<Checks> {
    let mut c = Checks::new();
    let g2 = SolitonModel::gaussian(2)?;
    let single = fit_volume_growth(&g2, &volume_samples(&g2, seed, 500))?.constant;
    let doubled = fit_volume_growth(&g2, &volume_samples(&g2, seed, 1000))?.constant;
    c.check("C(2) >= pi", single >= PI * (1.0 - 1e-12), num(single));
    let drift = doubled / single - 1.0;
    c.check("C(2) drift under doubling", drift.abs() <= 0.1, num(drift));
    let cyl = SolitonModel::cylinder(2, 3)?;
    let small = small_ball_ratios(&cyl, &cyl.minimizer())?;
    let worst = small.iter().map(|(_, q)| (q - 1.0).abs()).fold(0.0, f64::max);
    c.check("cylinder small balls within 2%", worst <= 0.02, num(worst));
    Ok(c)
}
