//! The `gravent` command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gravent_core::{Constants, Error as CoreError};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod output;
pub mod units;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("at least one run is infeasible")]
    Infeasible,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Infeasible => 4,
        }
    }

    pub(crate) fn numerical(e: impl std::fmt::Display) -> Self {
        CliError::Numerical(e.to_string())
    }

    /// Parameter problems are configuration errors; everything else is numerical.
    pub(crate) fn from_core(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { .. }
            | CoreError::Contact { .. }
            | CoreError::CouplingTooStrong { .. }
            | CoreError::WrongSetup(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gravent", version, about = "Gravitational entanglement between trapped or released masses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the covariance and write one CSV per run plus a JSON summary.
    Simulate {
        config: PathBuf,
        /// Override a configuration entry, e.g. `scenario.mass="1 mg"`.
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Compare coherence times and the Casimir ratio against the entanglement target.
    Feasibility {
        config: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        target: f64,
        /// Search horizon in seconds.
        #[arg(long)]
        horizon: Option<f64>,
        /// Exit with status 4 when any run is infeasible.
        #[arg(long)]
        enforce: bool,
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Evaluate the parameter grid of the `[sweep]` section.
    Sweep {
        config: PathBuf,
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Shape-dependent entangling rates, as JSON on stdout.
    Geometry {
        /// Trap frequency of the first body, rad/s.
        #[arg(long, default_value_t = 0.1)]
        omega: f64,
        /// kg/m³; osmium by default.
        #[arg(long)]
        density: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        varsigma: Vec<f64>,
    },
    /// Closed-form predictions for a configuration, as JSON on stdout.
    Analytic {
        config: PathBuf,
        #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
        set: Vec<String>,
    },
}

fn load(path: &PathBuf, set: &[String], constants: &Constants) -> Result<config::RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    config::parse_config(&path.display().to_string(), &text, set, constants)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let constants = Constants::from_env().map_err(|e| CliError::Config(format!("GRAVENT_CONSTANTS: {e}")))?;
    match cli.command {
        Command::Simulate { config, set, out_dir } => {
            let cfg = load(&config, &set, &constants)?;
            let result = commands::simulate(&cfg, out_dir);
            if let Ok(paths) = &result {
                for p in paths {
                    println!("{}", p.display());
                }
            }
            result.map(|_| ())
        }
        Command::Feasibility {
            config,
            target,
            horizon,
            enforce,
            set,
            out_dir,
        } => {
            if !(target > 0.0 && target.is_finite()) {
                return Err(CliError::Config("--target must be positive".into()));
            }
            let cfg = load(&config, &set, &constants)?;
            let outcome = commands::feasibility_report(&cfg, target, horizon, out_dir)?;
            for line in &outcome.lines {
                println!("{line}");
            }
            println!("{}", outcome.path.display());
            if enforce && !outcome.all_feasible {
                return Err(CliError::Infeasible);
            }
            Ok(())
        }
        Command::Sweep { config, set, out_dir } => {
            let cfg = load(&config, &set, &constants)?;
            let path = commands::sweep(&cfg, out_dir)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Geometry {
            omega,
            density,
            alpha,
            varsigma,
        } => {
            let density = density.unwrap_or(gravent_core::OSMIUM_DENSITY);
            print!("{}", commands::geometry_report(density, omega, &alpha, &varsigma)?);
            Ok(())
        }
        Command::Analytic { config, set } => {
            let cfg = load(&config, &set, &constants)?;
            print!("{}", commands::analytic_report(&cfg)?);
            Ok(())
        }
    }
}

/// Parses `args` and runs the command, returning the process exit status.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gravent: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
