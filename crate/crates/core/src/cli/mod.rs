//! Command-line front end.
//!
//! Every subcommand reads an experiment config, runs one library operation
//! and writes a CSV table (NDJSON for `trajectories`). Output ends with a
//! footer holding the version, seed, config hash and the canonical config,
//! so an output file can be passed back as `--config` to rerun it.
//!
//! Exit codes: 0 ok, 1 I/O failure, 2 config error, 3 numeric error,
//! 4 no-go pattern not satisfied.

mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub use config::{ConfigError, ExperimentConfig, Group};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(
    name = "arrival",
    version,
    about = "Arrival-time statistics of free Gaussian wave packets (m = ħ = 1)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Experiment config, or an earlier output file to rerun.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `seed` in the `[run]` section.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Validate the config and print the resolved plan without computing.
    #[arg(long)]
    pub dry_run: bool,
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Detector current over the window.
    Current(CommonArgs),
    /// Nonnegativity verdict and current minima.
    Cplus(CommonArgs),
    /// Integrated negative current.
    Negint(CommonArgs),
    /// Momentum threshold above which equal-momentum pairs keep a nonnegative current.
    Threshold(CommonArgs),
    /// Negative current of equal-momentum pairs over a momentum grid.
    SweepSpreading(CommonArgs),
    /// Velocity-mismatch metric over a momentum-ratio grid.
    SweepVelocity(CommonArgs),
    /// Bohmian trajectories as NDJSON.
    Trajectories(CommonArgs),
    /// First-arrival histogram against the flux prediction.
    ArrivalHist(CommonArgs),
    /// Checks the no-go pattern on the psi and phi packet groups.
    Nogo(CommonArgs),
    /// Detector current against its far-field approximation.
    Farfield(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Current(_) => "current",
            Command::Cplus(_) => "cplus",
            Command::Negint(_) => "negint",
            Command::Threshold(_) => "threshold",
            Command::SweepSpreading(_) => "sweep-spreading",
            Command::SweepVelocity(_) => "sweep-velocity",
            Command::Trajectories(_) => "trajectories",
            Command::ArrivalHist(_) => "arrival-hist",
            Command::Nogo(_) => "nogo",
            Command::Farfield(_) => "farfield",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Current(a)
            | Command::Cplus(a)
            | Command::Negint(a)
            | Command::Threshold(a)
            | Command::SweepSpreading(a)
            | Command::SweepVelocity(a)
            | Command::Trajectories(a)
            | Command::ArrivalHist(a)
            | Command::Nogo(a)
            | Command::Farfield(a) => a,
        }
    }
}

/// Failure of a CLI run, mapped onto an exit code.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numeric(Error),
    Pattern(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Pattern(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Numeric(e) => write!(f, "numeric error: {e}"),
            CliError::Pattern(m) => write!(f, "no-go pattern not satisfied: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::PatternNotSatisfied(m) => CliError::Pattern(m),
            other => CliError::Numeric(other),
        }
    }
}

/// Runs one command and returns the text written.
pub fn execute(command: &Command) -> Result<String, CliError> {
    let args = command.args();
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::Config(ConfigError::new(
            0,
            args.config.display().to_string(),
            e.to_string(),
        ))
    })?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        cfg.set_run("seed", seed.to_string());
    }
    let started = Instant::now();
    let out = if args.dry_run {
        commands::plan(command.name(), &cfg)?
    } else {
        commands::run(command.name(), &cfg)?
    };
    if args.verbose {
        eprintln!(
            "{} finished in {:.3} s",
            command.name(),
            started.elapsed().as_secs_f64()
        );
    }
    Ok(out)
}

/// Entry point of the binary: runs, writes output and returns the exit code.
pub fn main_with(cli: Cli) -> i32 {
    let args = cli.command.args().clone();
    let result = execute(&cli.command).and_then(|text| {
        // Dry runs print their plan but never touch the output file.
        match (&args.out, args.dry_run) {
            (Some(path), false) => std::fs::write(path, text)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
            _ => {
                print!("{text}");
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("arrival {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
