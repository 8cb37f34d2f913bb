use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use nbmp_lab::{run_experiment, ExperimentConfig, Kind, Level};

#[derive(Parser)]
#[command(name = "nbmp-lab", version, about = "Simulate N-branching Brownian motions and their barriers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the inverse first-passage problem for γ.
    SolveBoundary(Common),
    /// Simulate the N-particle branching-selection system.
    RunNbmp(Common),
    /// Simulate the γ-killed branching process.
    RunGbmp(Common),
    /// Run the N-BMP coupled with a barrier γ-BMP.
    RunCoupled(Common),
    /// Compare the N-BMP with the conditioned law as N grows.
    ConvergenceStudy(Common),
    /// Evaluate the explicit constants and bounds.
    Bounds(Common),
    /// Run the acceptance criteria.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
    },
}

#[derive(Args)]
struct Common {
    /// JSON or TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a field, e.g. `--set n=500 --set driver.drift=-1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

fn build(kind: Kind, c: &Common) -> Result<ExperimentConfig> {
    let base = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let mut cfg = base.with_overrides(&c.sets)?;
    cfg.kind = kind;
    if c.out.is_some() {
        cfg.output = c.out.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    let cli = Cli::parse();
    let cfg = match &cli.command {
        Command::SolveBoundary(c) => build(Kind::SolveBoundary, c)?,
        Command::RunNbmp(c) => build(Kind::RunNbmp, c)?,
        Command::RunGbmp(c) => build(Kind::RunGbmp, c)?,
        Command::RunCoupled(c) => build(Kind::RunCoupled, c)?,
        Command::ConvergenceStudy(c) => build(Kind::ConvergenceStudy, c)?,
        Command::Bounds(c) => build(Kind::Bounds, c)?,
        Command::Verify { common, level } => {
            let mut cfg = build(Kind::Verify, common)?;
            cfg.level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            cfg
        }
    };
    let outcome = run_experiment(&cfg)?;
    for c in &outcome.criteria {
        println!("{}", c.line());
    }
    println!("output: {}", outcome.dir.display());
    if cfg.kind == Kind::Bounds {
        print!("{}", std::fs::read_to_string(outcome.dir.join("bounds.json"))?);
    }
    Ok(outcome.passed)
}
