use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use degreelab_core::lab::{
    run_and_record, ConvergenceConfig, DegreeFieldConfig, DimensionConfig, DistanceConfig, DivergenceConfig, Experiment,
    ExperimentConfig, HolderStabilityConfig, ResultsLedger, ScalingConfig, SeminormConfig,
};

#[derive(Parser)]
#[command(name = "degreelab", version, about = "Degree fields, fractional Sobolev norms and the sphere-chain counterexample")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Degree field of a map on a target grid, checked against point algorithms.
    Degree(Common),
    /// Sphere-chain divergence of the L^p mass, or Hölder stability with --stability.
    Counterexample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        stability: bool,
    },
    /// Gagliardo seminorms of a degree field.
    Seminorm(Common),
    /// Dilation slopes of seminorms.
    Scaling(Common),
    /// Box-counting dimension of a domain boundary.
    Dimension(Common),
    /// Whitney-layer integral of a power of the boundary distance.
    Distint(Common),
    /// Distances of degree fields under shrinking perturbations.
    Converge(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the ledger, tables and plots.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the primary resolution knob of the experiment.
    #[arg(long)]
    resolution: Option<f64>,
}

impl Command {
    fn parts(&self) -> (&Common, Experiment, &'static [&'static str]) {
        match self {
            Command::Degree(c) => (c, Experiment::DegreeField(DegreeFieldConfig::default()), &["degree-field"]),
            Command::Counterexample { common, stability: false } => (
                common,
                Experiment::CounterexampleDivergence(DivergenceConfig::default()),
                &["counterexample-divergence", "holder-stability"],
            ),
            Command::Counterexample { common, stability: true } => (
                common,
                Experiment::HolderStability(HolderStabilityConfig::default()),
                &["counterexample-divergence", "holder-stability"],
            ),
            Command::Seminorm(c) => (c, Experiment::Seminorm(SeminormConfig::default()), &["seminorm"]),
            Command::Scaling(c) => (c, Experiment::ScalingLaw(ScalingConfig::default()), &["scaling-law"]),
            Command::Dimension(c) => (c, Experiment::DimensionEstimate(DimensionConfig::default()), &["dimension-estimate"]),
            Command::Distint(c) => (c, Experiment::DistanceIntegral(DistanceConfig::default()), &["distance-integral"]),
            Command::Converge(c) => (c, Experiment::ConvergenceCorollary(ConvergenceConfig::default()), &["convergence-corollary"]),
        }
    }
}

fn load(command: &Command) -> Result<(ExperimentConfig, PathBuf)> {
    let (common, default, accepted) = command.parts();
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ExperimentConfig::new(default),
    };
    let kind = config.experiment.kind();
    if !accepted.contains(&kind) {
        bail!("config kind {kind} does not belong to this subcommand (expected one of {accepted:?})");
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(h) = common.resolution {
        config.set_resolution(h);
    }
    config.validate().context("invalid configuration")?;
    Ok((config, common.out.clone()))
}

fn run(cli: Cli) -> Result<bool> {
    let (config, out) = load(&cli.command)?;
    let ledger = ResultsLedger::open(&out).with_context(|| format!("opening {}", out.display()))?;
    let outcome = run_and_record(&config, &ledger)?;
    let s = &outcome.summary;
    println!("experiment {} ({}) config {}", s.experiment, s.kind, &s.config_hash[..12]);
    for c in &s.checks {
        println!("  {} {}: {} [{}]", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.detail);
    }
    println!("outputs in {}", ledger.experiment_dir(&s.experiment)?.display());
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
