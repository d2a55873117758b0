use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dg_time::experiments::{self, ExperimentConfig, ExperimentId};

#[derive(Parser)]
#[command(name = "dgtime", about = "DG time-stepping experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the CSV tables
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the `seed` key
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Exactness, convergence order, duality and Galerkin orthogonality
    Converge(Common),
    /// Maximal regularity ratio against the mesh size
    MrSweep(Common),
    /// Stability function structure, sector bounds, product formula
    Rational(Common),
    /// Weighted error and locality of the regularized Green's function
    Green(Common),
    /// Fully discrete heat equation
    Heat(Common),
    /// Homogeneous problems with rough initial data
    Initial(Common),
    /// One-step quantities against the full functional
    OneStep(Common),
    /// Interpolation error orders
    Interp(Common),
    /// Regularized delta norms
    Mollifier(Common),
}

impl Command {
    fn split(self) -> (ExperimentId, Common) {
        match self {
            Command::Converge(c) => (ExperimentId::Converge, c),
            Command::MrSweep(c) => (ExperimentId::MrSweep, c),
            Command::Rational(c) => (ExperimentId::Rational, c),
            Command::Green(c) => (ExperimentId::Green, c),
            Command::Heat(c) => (ExperimentId::Heat, c),
            Command::Initial(c) => (ExperimentId::Initial, c),
            Command::OneStep(c) => (ExperimentId::OneStep, c),
            Command::Interp(c) => (ExperimentId::Interp, c),
            Command::Mollifier(c) => (ExperimentId::Mollifier, c),
        }
    }
}

fn execute(id: ExperimentId, common: &Common) -> dg_time::Result<bool> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(id, path)?,
        None => ExperimentConfig::defaults(id),
    };
    if let Some(seed) = common.seed {
        cfg = cfg.set("seed", seed)?;
    }
    let outcome = experiments::run(&cfg)?;
    for path in outcome.write_csv(&common.out)? {
        eprintln!("wrote {}", path.display());
    }
    for c in &outcome.criteria {
        println!("{c}");
    }
    println!("{}", outcome.summary());
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let (id, common) = Cli::parse().command.split();
    match execute(id, &common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
