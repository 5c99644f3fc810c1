use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use shrinker_lab::config::ExperimentConfig;
use shrinker_lab::error::LabResult;
use shrinker_lab::{experiments, output};

#[derive(Parser, Debug)]
#[command(name = "shrinker-lab", version, about = "Heat-equation experiments on closed-form shrinking solitons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Soliton identities and potential bounds at random points
    ModelCheck(Common),
    /// Entropy by quadrature against the closed form
    Entropy(Common),
    /// Volume-growth constant and small-ball asymptotics
    Volume(Common),
    /// Forward heat flow compared with the closed form
    Forward(Common),
    /// Taylor reconstruction of an earlier time from the series at t = 0
    Taylor(Common),
    /// Time-radius estimate of the Taylor series
    Radius(Common),
    /// Backward heat equation by the series method
    Backward(Common),
    /// Coefficient bound fit against the growth envelope
    BoundsFit(Common),
    /// Solvability criterion fit; exits 1 when infeasible
    Criterion(Common),
    /// Tychonov's solution and its growth
    TychonovDemo(Common),
    /// Local functional inequalities
    Ineq {
        #[command(subcommand)]
        which: Ineq,
    },
    /// Acceptance criteria 1 to 12
    ReproduceAll(Common),
}

#[derive(Subcommand, Debug)]
enum Ineq {
    Sobolev(Common),
    Caccioppoli(Common),
    Meanvalue(Common),
    Moser(Common),
    Localized(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// `key = value` file applied before flag overrides
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    topology: Option<String>,
    #[arg(long)]
    stencil: Option<String>,
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    /// time-Taylor order J
    #[arg(long, visible_alias = "J")]
    order: Option<String>,
    /// Tychonov terms
    #[arg(long = "K", visible_alias = "terms")]
    terms: Option<String>,
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    square: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    ks: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    quadrature: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

impl Common {
    fn overrides(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("model", &self.model),
            ("topology", &self.topology),
            ("stencil", &self.stencil),
            ("filter", &self.filter),
            ("scheme", &self.scheme),
            ("dt", &self.dt),
            ("order", &self.order),
            ("terms", &self.terms),
            ("data", &self.data),
            ("square", &self.square),
            ("t", &self.t),
            ("t0", &self.t0),
            ("p", &self.p),
            ("s", &self.s),
            ("r", &self.r),
            ("delta", &self.delta),
            ("m", &self.m),
            ("k", &self.k),
            ("ks", &self.ks),
            ("levels", &self.levels),
            ("samples", &self.samples),
            ("quadrature", &self.quadrature),
            ("seed", &self.seed),
            ("out", &self.out),
        ]
    }

    fn config(&self, command: &str) -> LabResult<ExperimentConfig> {
        let mut cfg = ExperimentConfig::for_command(command);
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for (k, v) in self.overrides() {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }
}

fn split(cmd: Command) -> (&'static str, Common) {
    match cmd {
        Command::ModelCheck(c) => ("model-check", c),
        Command::Entropy(c) => ("entropy", c),
        Command::Volume(c) => ("volume", c),
        Command::Forward(c) => ("forward", c),
        Command::Taylor(c) => ("taylor", c),
        Command::Radius(c) => ("radius", c),
        Command::Backward(c) => ("backward", c),
        Command::BoundsFit(c) => ("bounds-fit", c),
        Command::Criterion(c) => ("criterion", c),
        Command::TychonovDemo(c) => ("tychonov-demo", c),
        Command::Ineq { which } => match which {
            Ineq::Sobolev(c) => ("ineq-sobolev", c),
            Ineq::Caccioppoli(c) => ("ineq-caccioppoli", c),
            Ineq::Meanvalue(c) => ("ineq-meanvalue", c),
            Ineq::Moser(c) => ("ineq-moser", c),
            Ineq::Localized(c) => ("ineq-localized", c),
        },
        Command::ReproduceAll(c) => ("reproduce-all", c),
    }
}

fn execute(name: &str, common: &Common) -> LabResult<bool> {
    let cfg = common.config(name)?;
    let start = Instant::now();
    let report = experiments::run(name, &cfg)?;
    output::write_outputs(&report, &cfg, start.elapsed())?;
    println!("{name}: {} ({})", if report.pass { "pass" } else { "FAIL" }, cfg.out_dir().join("report.json").display());
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    output::init_threads();
    let (name, common) = split(cli.command);
    match execute(name, &common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("shrinker-lab {name}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
