//! Subcommands. Each builds its inputs from an [`ExperimentConfig`] and returns a [`Report`].

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use shrinker_core::analyticity::{
    criterion_check, growth_classify, recheck, reconstruct_and_compare, verify_coefficient_bound, BoundFitReport,
};
use shrinker_core::data::ClosedForm;
use shrinker_core::discrete::{Grid, GridField, LaplaceBeltrami, Shape, SpectralFilter, Stencil};
use shrinker_core::heat::{
    evaluate_series, solve_backward, solve_forward_from, time_taylor_coefficients_exact,
    time_taylor_coefficients_with, BackwardOptions, HeatTrajectory, Scheme, TaylorOptions, TimeTaylorSeries,
    DEFAULT_DELTA_MAX,
};
use shrinker_core::inequality::{
    caccioppoli_check, localized_sweep, mean_value_check, moser_chain_check, sobolev_check, MoserChainConfig,
    ParabolicCylinder,
};
use shrinker_core::quadrature::{unit_ball_volume, unit_sphere_area};
use shrinker_core::soliton::{check_soliton_identities, fit_volume_growth, potential_bounds_check};
use shrinker_core::tychonov::{self, demonstrate_sharpness, SharpnessConfig};
use shrinker_core::{Error, ModelKind, Point, SolitonModel};

use crate::acceptance;
use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::output::{cell, grid_json, num, nums, Report, Table};
use crate::specs;

pub const COMMANDS: &[&str] = &[
    "model-check",
    "entropy",
    "volume",
    "forward",
    "taylor",
    "radius",
    "backward",
    "bounds-fit",
    "criterion",
    "tychonov-demo",
    "ineq-sobolev",
    "ineq-caccioppoli",
    "ineq-meanvalue",
    "ineq-moser",
    "ineq-localized",
    "reproduce-all",
];

pub fn run(command: &str, cfg: &ExperimentConfig) -> LabResult<Report> {
    match command {
        "model-check" => model_check(cfg),
        "entropy" => entropy(cfg),
        "volume" => volume(cfg),
        "forward" => forward(cfg),
        "taylor" => taylor(cfg),
        "radius" => radius(cfg),
        "backward" => backward(cfg),
        "bounds-fit" => bounds_fit(cfg),
        "criterion" => criterion(cfg),
        "tychonov-demo" => tychonov_demo(cfg),
        "ineq-sobolev" => ineq_sobolev(cfg),
        "ineq-caccioppoli" => ineq_caccioppoli(cfg),
        "ineq-meanvalue" => ineq_meanvalue(cfg),
        "ineq-moser" => ineq_moser(cfg),
        "ineq-localized" => ineq_localized(cfg),
        "reproduce-all" => reproduce_all(cfg),
        other => Err(LabError::usage(format!("unknown command {other:?}"))),
    }
}

pub fn model(cfg: &ExperimentConfig) -> LabResult<SolitonModel> {
    let m: SolitonModel = cfg.get("model").parse()?;
    match cfg.count("quadrature")? {
        0 => Ok(m),
        q => Ok(m.with_quadrature(q)?),
    }
}

pub fn grid(cfg: &ExperimentConfig, model: &SolitonModel) -> LabResult<Arc<Grid>> {
    Ok(Grid::build(model, specs::parse_topology(cfg.get("topology"))?)?)
}

pub fn operator(cfg: &ExperimentConfig, grid: &Arc<Grid>) -> LabResult<LaplaceBeltrami> {
    let stencil = match cfg.get("stencil") {
        "auto" => match grid.shape() {
            Shape::Line { periodic: true, .. } => Stencil::Spectral,
            _ => Stencil::Central2,
        },
        "central" => Stencil::Central2,
        "spectral" => Stencil::Spectral,
        s => return Err(LabError::usage(format!("stencil: expected auto, central or spectral, got {s:?}"))),
    };
    Ok(LaplaceBeltrami::with_stencil(grid.clone(), stencil)?)
}

pub fn filter(cfg: &ExperimentConfig, grid: &Grid) -> LabResult<Option<SpectralFilter>> {
    let floor = cfg.real("filter")?;
    if floor > 0.0 && SpectralFilter::supports(grid) {
        Ok(Some(SpectralFilter::new(floor)?))
    } else {
        Ok(None)
    }
}

pub fn data(cfg: &ExperimentConfig) -> LabResult<ClosedForm> {
    Ok(cfg.get("data").parse()?)
}

/// `p` in chart coordinates; `min`, or the default `0` on a model of another dimension, picks the minimiser.
pub fn base_point(cfg: &ExperimentConfig, model: &SolitonModel) -> LabResult<Point> {
    let s = cfg.get("p");
    if s == "min" {
        return Ok(model.minimizer());
    }
    let c = specs::parse_point(s)?;
    if c.len() != model.dim() {
        if c == [0.0] {
            return Ok(model.minimizer());
        }
        return Err(LabError::usage(format!("p has {} coordinates, the model has dimension {}", c.len(), model.dim())));
    }
    let p = Point::new(c);
    model.validate_point(&p)?;
    Ok(p)
}

fn require_line(grid: &Grid) -> LabResult<()> {
    match grid.shape() {
        Shape::Line { .. } => Ok(()),
        _ => Err(Error::unsupported("closed-form data lives on line topologies").into()),
    }
}

fn check_window(data: &ClosedForm, t0: f64, t1: f64) -> LabResult<()> {
    if t0 <= data.birth_time() || t1 >= data.blow_up_time() {
        return Err(Error::validation(format!(
            "{data} is defined on ({}, {}), the run needs [{t0}, {t1}]",
            data.birth_time(),
            data.blow_up_time()
        ))
        .into());
    }
    Ok(())
}

/// Flow of `data` on `[t0, t1]` by the configured scheme, from the closed form at `t0`.
pub fn trajectory(cfg: &ExperimentConfig, op: &LaplaceBeltrami, data: &ClosedForm, t0: f64, t1: f64) -> LabResult<HeatTrajectory> {
    let grid = op.grid();
    require_line(grid)?;
    check_window(data, t0, t1)?;
    let dt = cfg.real("dt")?;
    match specs::parse_scheme(cfg.get("scheme"), dt)? {
        Scheme::ClosedForm => Ok(HeatTrajectory::from_closed_form(grid, data, &HeatTrajectory::uniform_times(t0, t1, dt)?)?),
        scheme => Ok(solve_forward_from(op, &data.sample_at(grid, t0), t0, t1, scheme, 1)?),
    }
}

pub fn squared(u: &HeatTrajectory) -> LabResult<HeatTrajectory> {
    let snaps = u.snapshots.iter().map(|s| s.iter().map(|v| v * v).collect()).collect();
    Ok(HeatTrajectory::new(u.grid.clone(), u.times.clone(), snaps, u.scheme)?)
}

pub fn random_points(model: &SolitonModel, seed: u64, count: usize, extent: f64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u: Vec<f64> = (0..model.dim()).map(|_| rng.random::<f64>()).collect();
            model.point_from_unit(&u, extent)
        })
        .collect()
}

/// Ball-volume samples: random centres in `[-3,3]` with radii in `[0.1, 3]`, then the minimiser.
pub fn volume_samples(model: &SolitonModel, seed: u64, count: usize) -> Vec<(Point, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut out: Vec<(Point, f64)> = (0..count)
        .map(|_| {
            let u: Vec<f64> = (0..model.dim()).map(|_| rng.random::<f64>()).collect();
            (model.point_from_unit(&u, 3.0), rng.random_range(0.1..3.0))
        })
        .collect();
    for r in [0.5, 1.0, 2.0] {
        out.push((model.minimizer(), r));
    }
    out
}

/// Small-ball volumes against `omega_n r^n`.
pub fn small_ball_ratios(model: &SolitonModel, p: &Point) -> LabResult<Vec<(f64, f64)>> {
    [0.05, 0.1, 0.2, 0.4]
        .iter()
        .map(|&r| Ok((r, model.ball_volume(p, r)? / (unit_ball_volume(model.dim()) * r.powi(model.dim() as i32)))))
        .collect()
}

/// Closed-form entropy of the model.
pub fn entropy_oracle(model: &SolitonModel) -> f64 {
    match model.kind() {
        ModelKind::Gaussian => 0.0,
        ModelKind::Cylinder { k } => {
            let kf = k as f64;
            (unit_sphere_area(k + 1) * (2.0 * (kf - 1.0)).powf(0.5 * kf) * (4.0 * std::f64::consts::PI).powf(-0.5 * kf)).ln()
                - 0.5 * kf
        }
    }
}

/// Random bumps inside `B_p(r)`: centres within `0.3 r` of `p`, radii in `[0.6 r, r - d]`.
pub fn random_bumps(model: &SolitonModel, p: &Point, r: f64, count: usize, seed: u64) -> Vec<(Point, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb0b);
    let reach = 0.3 * r;
    let rs = model.sphere_radius().unwrap_or(1.0);
    let k = model.sphere_dim();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut c = p.coords.clone();
        for (i, v) in c.iter_mut().enumerate() {
            let scale = if i + 1 < k {
                1.0 / rs
            } else if i + 1 == k {
                1.0 / (rs * p.coords[..i].iter().map(|t| t.sin()).product::<f64>().max(0.1))
            } else {
                1.0
            };
            *v += (2.0 * rng.random::<f64>() - 1.0) * reach * scale;
        }
        let q = Point::new(c);
        if model.validate_point(&q).is_err() {
            continue;
        }
        let d = model.distance_unchecked(&q, p);
        if d > reach {
            continue;
        }
        let rho = rng.random_range(0.6 * r..=(r - d));
        out.push((q, rho));
    }
    out
}

fn series_for(cfg: &ExperimentConfig, op: &LaplaceBeltrami, data: &ClosedForm, order: usize) -> LabResult<TimeTaylorSeries> {
    let grid = op.grid();
    require_line(grid)?;
    let line = matches!(grid.shape(), Shape::Line { periodic: false, .. });
    if let ClosedForm::Tychonov { time, terms } = data {
        if line {
            return Ok(tychonov::profile_series(grid, *time, *terms, order)?);
        }
    }
    if line && data.is_exactly_sampleable() {
        return Ok(time_taylor_coefficients_exact(grid, data, order, DEFAULT_DELTA_MAX)?);
    }
    let opts = TaylorOptions { filter: filter(cfg, grid)?, ..Default::default() };
    Ok(time_taylor_coefficients_with(op, &data.sample(grid), order, opts)?)
}

fn fit_json(rep: &BoundFitReport) -> Value {
    json!({
        "A1": num(rep.a1),
        "A2": num(rep.a2),
        "A3": num(rep.a3),
        "A4": num(rep.a4),
        "mu": num(rep.mu),
        "feasible": rep.feasible,
        "growth_ratio": rep.growth_ratio.map(num),
        "tail_slope": rep.tail_slope.map(num),
        "a4_saturated": rep.a4_saturated,
        "a3_by_order": nums(&rep.a3_by_order),
        "residuals": rep.residuals.iter().map(|r| json!({
            "j": r.j,
            "x": nums(&r.x),
            "lhs": num(r.lhs),
            "rhs": num(r.rhs),
        })).collect::<Vec<_>>(),
    })
}

fn residual_table(rep: &BoundFitReport) -> Table {
    let mut t = Table::new("residuals", &["j", "x", "lhs", "rhs"]);
    for r in &rep.residuals {
        let x: Vec<String> = r.x.iter().map(|v| cell(*v)).collect();
        t.push(vec![r.j.to_string(), x.join(" "), cell(r.lhs), cell(r.rhs)]);
    }
    t
}

fn model_check(cfg: &ExperimentConfig) -> LabResult<Report> {
    let m = model(cfg)?;
    let pts = random_points(&m, cfg.seed()?, cfg.count("samples")?, 10.0);
    let id = check_soliton_identities(&m, &pts)?;
    let p = base_point(cfg, &m)?;
    let b = potential_bounds_check(&m, &p, &pts)?;
    let mut r = Report::new("model-check");
    r.grid = json!({"model": m.to_string(), "samples": pts.len()});
    r.oracle("closed-form curvature and potential of the model");
    r.set("tensor_residual", num(id.tensor_residual));
    r.set("normalization_residual", num(id.normalization_residual));
    r.set("min_scalar_curvature", num(id.min_scalar_curvature));
    r.set("potential_bounds_hold", b.holds());
    r.set("lower_slack", num(b.lower_slack));
    r.set("upper_slack", num(b.upper_slack));
    r.set("curvature_slack", num(b.curvature_slack));
    r.set("inf_f", num(b.inf_f));
    r.set("violations", b.violations.len());
    r.pass = id.tensor_residual < 1e-10 && id.normalization_residual < 1e-12 && b.holds();
    let mut t = Table::new("samples", &["index", "coords", "f", "R", "grad_f_sq"]);
    for (i, x) in pts.iter().enumerate() {
        let c: Vec<String> = x.coords.iter().map(|v| cell(*v)).collect();
        t.push(vec![
            i.to_string(),
            c.join(" "),
            cell(m.potential(x)),
            cell(m.scalar_curvature(x)),
            cell(m.grad_potential_sq(x)),
        ]);
    }
    r.tables.push(t);
    Ok(r)
}

fn entropy(cfg: &ExperimentConfig) -> LabResult<Report> {
    let m = model(cfg)?;
    let mu = m.entropy_mu();
    let oracle = entropy_oracle(&m);
    let tol = match m.kind() {
        ModelKind::Gaussian => 1e-8,
        ModelKind::Cylinder { .. } => 1e-6,
    };
    let mut r = Report::new("entropy");
    r.grid = json!({"model": m.to_string(), "quadrature": m.quadrature_resolution()});
    r.oracle("mu = ln(|S^k| (2(k-1))^(k/2) (4 pi)^(-k/2)) - k/2, 0 for gaussian");
    r.set("mu", num(mu));
    r.set("oracle", num(oracle));
    r.set("error", num((mu - oracle).abs()));
    r.set("tolerance", num(tol));
    r.set("normalization_self_check", num(m.entropy_self_check()));
    r.pass = (mu - oracle).abs() <= tol;
    let mut t = Table::new("convergence", &["resolution", "mu", "error"]);
    let base = m.quadrature_resolution();
    for res in [base / 4, base / 2, base, 2 * base] {
        let v = m.entropy_quadrature(res.max(2));
        t.push(vec![res.max(2).to_string(), cell(v), cell((v - oracle).abs())]);
    }
    r.tables.push(t);
    Ok(r)
}

fn volume(cfg: &ExperimentConfig) -> LabResult<Report> {
    let m = model(cfg)?;
    let n = cfg.count("samples")?;
    let seed = cfg.seed()?;
    let single = fit_volume_growth(&m, &volume_samples(&m, seed, n))?;
    let doubled = fit_volume_growth(&m, &volume_samples(&m, seed, 2 * n))?;
    let stability = doubled.constant / single.constant - 1.0;
    let small = small_ball_ratios(&m, &m.minimizer())?;
    let small_ok = small.iter().all(|(_, q)| (q - 1.0).abs() <= 0.02);
    let mut r = Report::new("volume");
    r.grid = json!({"model": m.to_string(), "samples": n});
    r.oracle("euclidean small-ball volume omega_n r^n");
    r.set("constant", num(single.constant));
    r.set("constant_doubled", num(doubled.constant));
    r.set("stability", num(stability));
    r.set("small_ball_ratios", small.iter().map(|(r, q)| json!({"r": num(*r), "ratio": num(*q)})).collect::<Vec<_>>());
    r.pass = single.constant.is_finite() && stability.abs() <= 0.1 && small_ok;
    let samples = volume_samples(&m, seed, n);
    let mut t = Table::new("ratios", &["coords", "r", "ratio"]);
    for ((p, rad), q) in samples.iter().zip(&single.ratios) {
        let c: Vec<String> = p.coords.iter().map(|v| cell(*v)).collect();
        t.push(vec![c.join(" "), cell(*rad), cell(*q)]);
    }
    r.tables.push(t);
    Ok(r)
}

fn profile_table(name: &str, grid: &Grid, cols: &[(&str, &[f64])]) -> Table {
    let mut header = vec!["x"];
    header.extend(cols.iter().map(|(h, _)| *h));
    let mut t = Table::new(name, &header);
    for i in 0..grid.len() {
        let mut row = vec![cell(grid.x(i))];
        row.extend(cols.iter().map(|(_, v)| cell(v[i])));
        t.push(row);
    }
    t
}

fn forward(cfg: &ExperimentConfig) -> LabResult<Report> {
    let m = model(cfg)?;
    let g = grid(cfg, &m)?;
    let op = operator(cfg, &g)?;
    let d = data(cfg)?;
    let (t0, t1) = (cfg.real("t0")?, cfg.real("t")?);
    let traj = trajectory(cfg, &op, &d, t0, t1)?;
    let u = traj.terminal();
    let exact: Vec<f64> = g.points().iter().map(|p| d.solution(p.coords[0], t1)).collect();
    let half = match g.shape() {
        Shape::Line { periodic: false, .. } => g.points().iter().map(|p| p.coords[0].abs()).fold(0.0, f64::max) * 0.5,
        _ => f64::INFINITY,
    };
    let err = u
        .values
        .iter()
        .zip(&exact)
        .zip(g.points())
        .filter(|(_, p)| p.coords[0].abs() <= half)
        .map(|((a, b), _)| (a - b).abs())
        .fold(0.0, f64::max);
    if !u.is_finite() {
        return Err(Error::numerical("forward solution is not finite").into());
    }
    let mut r = Report::new("forward");
    r.grid = grid_json(&g);
    r.oracle(&format!("closed-form flow of {d}"));
    r.set("scheme", traj.scheme.name());
    r.set("t0", num(t0));
    r.set("t", num(t1));
    r.set("sup_error", num(err));
    r.set("error_window", num(half));
    r.tables.push(profile_table("profile", &g, &[("numeric", &u.values), ("exact", &exact)]));
    Ok(r)
}

fn taylor(cfg: &ExperimentConfig) -> LabResult<Report> {
    let m = model(cfg)?;
    let g = grid(cfg, &m)?;
    let op = operator(cfg, &g)?;
    let d = data(cfg)?;
    let (start, t) = (cfg.real("t0")?, cfg.real("t")?);
    let traj = trajectory(cfg, &op, &d, start, 0.0)?;
    let order = cfg.count("order")?;
    let opts = TaylorOptions { filter: filter(cfg, &g)?, ..Default::default() };
    let series = time_taylor_coefficients_with(&op, &traj.terminal(), order, opts)?;
    let rec = reconstruct_and_compare(&traj, &series, t)?;
    let ev = evaluate_series(&series, t);
    let exact: Vec<f64> = g.points().iter().map(|p| d.solution(p.coords[0], t)).collect();
    let closed_err = ev
        .field
        .values
        .iter()
        .zip(&exact)
        .zip(&rec.mask)
        .filter(|(_, m)| **m)
        .map(|((a, b), _)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut r = Report::new("taylor");
    r.grid = grid_json(&g);
    r.oracle(&format!("closed-form flow of {d}"));
    r.set("order", order);
    r.set("t", num(t));
    r.set("sup_error", num(rec.sup_error));
    r.set("closed_form_error", num(closed_err));
    r.set("truncation_bound", num(rec.truncation_bound));
    r.set("radius", num(series.radius.delta));
    r.set("interior_nodes", rec.mask.iter().filter(|m| **m).count());
    r.pass = rec.sup_error.is_finite();
    let snap = traj.snapshot_at(t).map(|s| s.to_vec()).unwrap_or_default();
    let mask: Vec<f64> = rec.mask.iter().map(|m| f64::from(u8::from(*m))).collect();
    r.tables.push(profile_table(
        "reconstruction",
        &g,
        &[("series", &ev.field.values), ("trajectory", &snap), ("exact", &exact), ("interior", &mask)],
    ));
    Ok(r)
}

fn coefficient_table(series: &TimeTaylorSeries) -> Table {
    let mut t = Table::new("coefficients", &["j", "sup_abs", "ln_sup_over_factorial"]);
    let mut lf = 0.0;
    for j in 0..=series.order() {
        if j > 0 {
            lf += (j as f64).ln();
        }
        let s = series.sup(j);
        t.push(vec![j.to_string(), cell(s), cell(s.ln() - lf)]);
    }
    t
}

fn radius(cfg: &ExperimentConfig) -> LabResult<Report> {
    let m = model(cfg)?;
    let g = grid(cfg, &m)?;
    let op = operator(cfg, &g)?;
    let d = data(cfg)?;
    let series = series_for(cfg, &op, &d, cfg.count("order")?)?;
    let tau = d.blow_up_time();
    let ratio = series.radius.delta / tau;
    let mut r = Report::new("radius");
    r.grid = grid_json(&g);
    if tau.is_finite() {
        r.oracle(&format!("blow-up time {tau} of {d}"));
    }
    r.set("delta", num(series.radius.delta));
    r.set("entire", series.radius.entire);
    r.set("blow_up_time", num(tau));
    r.set("ratio", num(ratio));
    r.pass = !tau.is_finite() || (0.8..=1.25).contains(&ratio);
    r.tables.push(coefficient_table(&series));
    Ok(r)
}

fn backward(cfg: &ExperimentConfig) -> LabResult<Report> {
    let m = model(cfg)?;
    let g = grid(cfg, &m)?;
    require_line(&g)?;
    let op = operator(cfg, &g)?;
    let d = data(cfg)?;
    let t = cfg.real("t")?;
    check_window(&d, -t, 0.0)?;
    let a = d.sample(&g);
    let opts = BackwardOptions {
        order: cfg.count("order")?,
        taylor: TaylorOptions { filter: filter(cfg, &g)?, ..Default::default() },
        base_point: Some(base_point(cfg, &m)?),
        ..Default::default()
    };
    let b = solve_backward(&op, &a, t, &opts)?;
    let exact: Vec<f64> = g.points().iter().map(|p| d.solution(p.coords[0], -t)).collect();
    let mask = &b.series.mask;
    let sup = |x: &[f64], y: &[f64]| {
        x.iter().zip(y).zip(mask).filter(|(_, m)| **m).map(|((a, b), _)| (a - b).abs()).fold(0.0, f64::max)
    };
    let err = sup(&b.field.values, &exact);
    let scheme = match specs::parse_scheme(cfg.get("scheme"), cfg.real("dt")?)? {
        Scheme::ClosedForm => Scheme::CrankNicolson { dt: cfg.real("dt")? },
        s => s,
    };
    let back = GridField::new(g.clone(), b.field.values.clone())?;
    let fwd = solve_forward_from(&op, &back, -t, 0.0, scheme, 1)?;
    let round_trip = sup(&fwd.terminal().values, &a.values);
    let mut r = Report::new("backward");
    r.grid = grid_json(&g);
    r.oracle(&format!("closed-form flow of {d} at -t"));
    r.set("t", num(t));
    r.set("sup_error", num(err));
    r.set("round_trip_error", num(round_trip));
    r.set("round_trip_scheme", scheme.name());
    r.set("truncation_bound", num(b.truncation_bound));
    r.set("radius", num(b.series.radius.delta));
    r.set("criterion", fit_json(&b.criterion));
    r.tables.push(profile_table("profile", &g, &[("data", &a.values), ("backward", &b.field.values), ("exact", &exact)]));
    Ok(r)
}

fn bounds_fit(cfg: &ExperimentConfig) -> LabResult<Report> {
    let m = model(cfg)?;
    let g = grid(cfg, &m)?;
    let op = operator(cfg, &g)?;
    let d = data(cfg)?;
    let p = base_point(cfg, &m)?;
    let traj = trajectory(cfg, &op, &d, cfg.real("t0")?, 0.0)?;
    let env = growth_classify(&traj, &p)?;
    let series = series_for(cfg, &op, &d, cfg.count("order")?)?;
    let rep = verify_coefficient_bound(&series, &m, &p, &env)?;
    let rechecked = rep.feasible && recheck(&series, &m, &p, &rep)?;
    let mut r = Report::new("bounds-fit");
    r.grid = grid_json(&g);
    r.set("envelope", json!({"A1": num(env.a1), "A2": num(env.a2), "trivial": env.trivial}));
    r.set("fit", fit_json(&rep));
    r.set("recheck", rechecked);
    r.pass = rep.feasible && rechecked;
    r.tables.push(residual_table(&rep));
    Ok(r)
}

fn criterion(cfg: &ExperimentConfig) -> LabResult<Report> {
    let m = model(cfg)?;
    let g = grid(cfg, &m)?;
    let op = operator(cfg, &g)?;
    let d = data(cfg)?;
    let p = base_point(cfg, &m)?;
    let series = series_for(cfg, &op, &d, cfg.count("order")?)?;
    let rep = criterion_check(&series, &m, &p)?;
    let rechecked = rep.feasible && recheck(&series, &m, &p, &rep)?;
    let mut r = Report::new("criterion");
    r.grid = grid_json(&g);
    r.set("fit", fit_json(&rep));
    r.set("recheck", rechecked);
    r.pass = rep.feasible && rechecked;
    let mut t = Table::new("a3_by_order", &["order", "a3"]);
    for (j, a) in rep.a3_by_order.iter().enumerate() {
        t.push(vec![j.to_string(), cell(*a)]);
    }
    r.tables.push(t);
    r.tables.push(residual_table(&rep));
    Ok(r)
}

fn tychonov_demo(cfg: &ExperimentConfig) -> LabResult<Report> {
    let sc = SharpnessConfig { terms: cfg.count("terms")?, taylor_order: cfg.count("order")?, ..Default::default() };
    let rep = demonstrate_sharpness(&sc)?;
    let mut r = Report::new("tychonov-demo");
    r.grid = json!({"window": num(sc.window), "window_samples": sc.window_samples, "terms": sc.terms});
    r.oracle("v(0, t) = exp(-1/t^2)");
    r.set("verdict", rep.verdict());
    r.set("past_max_abs", num(rep.past_max_abs));
    r.set("v_origin_half", num(rep.v_origin_half));
    r.set("v_origin_half_oracle", num((-4.0f64).exp()));
    r.set("taylor_coefficients_max_abs", num(rep.taylor_coefficients_max_abs));
    r.set("later_max_abs", num(rep.later_max_abs));
    r.set("max_log_ratio", num(rep.max_log_ratio));
    r.set("envelope", json!({"c1": num(rep.envelope.0), "c2": num(rep.envelope.1), "epsilon": num(sc.epsilon)}));
    r.set("max_tail", num(rep.max_tail));
    r.set(
        "quadratic_exceeded",
        rep.quadratic_exceeded.iter().map(|(c, e)| json!({"c": num(*c), "exceeded": e})).collect::<Vec<_>>(),
    );
    r.pass = rep.verdict();
    let mut t = Table::new("growth", &["x", "t", "log_abs_v"]);
    for s in &rep.growth {
        t.push(vec![cell(s.x), cell(s.t), cell(s.log_abs_v)]);
    }
    r.tables.push(t);
    Ok(r)
}

fn ineq_sobolev(cfg: &ExperimentConfig) -> LabResult<Report> {
    let m = model(cfg)?;
    let g = grid(cfg, &m)?;
    let op = operator(cfg, &g)?;
    let p = base_point(cfg, &m)?;
    let rad = cfg.real("r")?;
    let bumps = random_bumps(&m, &p, rad, cfg.count("samples")?, cfg.seed()?);
    let tests: Vec<GridField> = bumps.iter().map(|(c, rho)| shrinker_core::inequality::bump(&g, c, *rho)).collect();
    let rep = sobolev_check(&op, &p, rad, &tests)?;
    let scaled: Vec<GridField> = tests
        .iter()
        .map(|f| GridField::new(g.clone(), f.values.iter().map(|v| 3.7 * v).collect()))
        .collect::<Result<_, _>>()?;
    let srep = sobolev_check(&op, &p, rad, &scaled)?;
    let scale_dev = rep
        .ratios
        .iter()
        .zip(&srep.ratios)
        .map(|(a, b)| if *a == 0.0 { (b - a).abs() } else { (b / a - 1.0).abs() })
        .fold(0.0, f64::max);
    let mut r = Report::new("ineq-sobolev");
    r.grid = grid_json(&g);
    r.set("max_ratio", num(rep.max_ratio));
    r.set("scale_deviation", num(scale_dev));
    r.set("inequality_holds", rep.pass());
    r.pass = rep.pass() && scale_dev <= 1e-12;
    let mut t = Table::new("bumps", &["index", "center", "rho", "lhs", "rhs_core", "ratio"]);
    for (i, (c, rho)) in bumps.iter().enumerate() {
        let cc: Vec<String> = c.coords.iter().map(|v| cell(*v)).collect();
        t.push(vec![i.to_string(), cc.join(" "), cell(*rho), cell(rep.lhs[i]), cell(rep.rhs_core[i]), cell(rep.ratios[i])]);
    }
    r.tables.push(t);
    Ok(r)
}

fn line_setup(cfg: &ExperimentConfig) -> LabResult<(Arc<Grid>, LaplaceBeltrami, ClosedForm, Point)> {
    let m = model(cfg)?;
    let g = grid(cfg, &m)?;
    let op = operator(cfg, &g)?;
    let p = base_point(cfg, &m)?;
    Ok((g, op, data(cfg)?, p))
}

fn ineq_caccioppoli(cfg: &ExperimentConfig) -> LabResult<Report> {
    let (g, op, d, p) = line_setup(cfg)?;
    let s = cfg.real("s")?;
    let u = trajectory(cfg, &op, &d, cfg.real("t0")?, s)?;
    let rep = caccioppoli_check(&u, &p, s, cfg.count("k")?)?;
    let mut r = Report::new("ineq-caccioppoli");
    r.grid = grid_json(&g);
    r.set("k", rep.k);
    r.set("max_ratio", num(rep.max_ratio));
    r.pass = rep.pass();
    let mut t = Table::new("cubes", &["j", "lhs", "rhs_core", "ratio"]);
    for row in &rep.rows {
        t.push(vec![row.j.to_string(), cell(row.lhs), cell(row.rhs_core), cell(row.ratio)]);
    }
    r.tables.push(t);
    Ok(r)
}

fn meanvalue_inputs(cfg: &ExperimentConfig) -> LabResult<(Arc<Grid>, HeatTrajectory, ParabolicCylinder)> {
    let (g, op, d, p) = line_setup(cfg)?;
    let s = cfg.real("s")?;
    let cyl = ParabolicCylinder::new(p, s, cfg.real("r")?, cfg.real("delta")?)?;
    let u = trajectory(cfg, &op, &d, cfg.real("t0")?, s)?;
    let v = if cfg.flag("square")? { squared(&u)? } else { u };
    Ok((g, v, cyl))
}

fn ineq_meanvalue(cfg: &ExperimentConfig) -> LabResult<Report> {
    let (g, v, cyl) = meanvalue_inputs(cfg)?;
    let rep = mean_value_check(&v, &cyl, cfg.real("m")?)?;
    let mut r = Report::new("ineq-meanvalue");
    r.grid = grid_json(&g);
    r.set("r", num(rep.r));
    r.set("delta", num(rep.delta));
    r.set("m", num(rep.m));
    r.set("lhs", num(rep.lhs));
    r.set("integral", num(rep.integral));
    r.set("rhs_core", num(rep.rhs_core));
    r.set("rho", num(rep.rho));
    r.set("mu", num(rep.mu));
    r.set("subsolution_margin", num(rep.subsolution_margin));
    r.pass = rep.pass();
    Ok(r)
}

fn ineq_moser(cfg: &ExperimentConfig) -> LabResult<Report> {
    let (g, v, cyl) = meanvalue_inputs(cfg)?;
    let mc = MoserChainConfig::new(g.model().dim(), cfg.count("levels")?, cfg.real("m")?)?;
    let rep = moser_chain_check(&v, &cyl, &mc)?;
    let mut r = Report::new("ineq-moser");
    r.grid = grid_json(&g);
    r.set("levels_requested", rep.levels_requested);
    r.set("levels_reached", rep.levels_reached);
    r.set("truncated", rep.truncated);
    r.set("spread", num(rep.spread));
    r.set("bounded", rep.bounded);
    r.set("steps_hold", rep.steps_hold);
    r.set("ln_eb", num(rep.ln_eb));
    r.set("composed_ln_norm", num(rep.composed_ln_norm));
    r.set("direct_ln_norm", num(rep.direct_ln_norm));
    r.set("ln_sup_top", num(rep.ln_sup_top));
    r.pass = rep.bounded && rep.steps_hold;
    let mut t = Table::new(
        "steps",
        &["i", "sigma_outer", "sigma_inner", "exponent", "ln_norm_outer", "ln_norm_inner", "constant", "power_constant"],
    );
    for s in &rep.steps {
        t.push(vec![
            s.i.to_string(),
            cell(s.sigma_outer),
            cell(s.sigma_inner),
            cell(s.exponent),
            cell(s.ln_norm_outer),
            cell(s.ln_norm_inner),
            cell(s.constant),
            cell(s.power_constant),
        ]);
    }
    r.tables.push(t);
    Ok(r)
}

fn ineq_localized(cfg: &ExperimentConfig) -> LabResult<Report> {
    let (g, op, d, p) = line_setup(cfg)?;
    let s = cfg.real("s")?;
    let ks: Vec<usize> = cfg.get("ks").split(',').map(specs::parse_usize).collect::<LabResult<_>>()?;
    let u = trajectory(cfg, &op, &d, cfg.real("t0")?, s)?;
    let sweep = localized_sweep(&u, &p, s, &ks)?;
    let mut r = Report::new("ineq-localized");
    r.grid = grid_json(&g);
    r.set("growth", num(sweep.growth));
    r.set("c2", sweep.reports.iter().map(|x| num(x.c2)).collect::<Vec<_>>());
    r.pass = sweep.pass();
    let mut t = Table::new("sweep", &["k", "lhs", "integral", "rhs_core", "c2"]);
    for x in &sweep.reports {
        t.push(vec![x.k.to_string(), cell(x.lhs), cell(x.integral), cell(x.rhs_core), cell(x.c2)]);
    }
    r.tables.push(t);
    Ok(r)
}

fn reproduce_all(cfg: &ExperimentConfig) -> LabResult<Report> {
    let outcomes = acceptance::run_all(cfg.seed()?);
    let mut r = Report::new("reproduce-all");
    r.oracle("per-criterion oracles listed under results.criteria[].details");
    r.pass = outcomes.iter().all(|o| o.pass);
    r.set("criteria", outcomes.iter().map(|o| o.to_json()).collect::<Vec<_>>());
    let mut t = Table::new("criteria", &["id", "title", "pass"]);
    for o in &outcomes {
        t.push(vec![o.id.to_string(), o.title.to_string(), o.pass.to_string()]);
    }
    r.tables.push(t);
    Ok(r)
}
