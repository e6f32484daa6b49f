//! `fdnn`: snapshot generation, surrogate training, posterior sampling,
//! and chain diagnostics for the diffusion-reaction parameter study.
//!
//! Every subcommand resolves its configuration the same way (preset,
//! then file, then `--set` overrides, then `--out`), writes the resolved
//! copy into the output directory, and exits nonzero with a categorized
//! message on failure: 2 for configuration, 3 for files, 4 for numerics.

mod commands;
mod config;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use commands::{
    cmd_diagnose, cmd_error, cmd_full_run, cmd_mcmc, cmd_snapshots, cmd_train, prepare_run,
};
use config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or contradictory artifact headers; exit 2.
    Config(String),
    /// Missing or malformed files; exit 3.
    Io(fdnn_core::Error),
    /// Solver, optimizer, or sampler failures; exit 4.
    Numeric(fdnn_core::Error),
}

impl CliError {
    fn from_core(e: fdnn_core::Error) -> Self {
        use fdnn_core::Error as E;
        match e {
            E::Io { .. } | E::Parse { .. } => CliError::Io(e),
            other => CliError::Numeric(other),
        }
    }

    /// Core errors raised while interpreting configuration values.
    pub fn config_from_core(e: fdnn_core::Error) -> Self {
        CliError::Config(e.to_string())
    }

    /// Core errors from reading or writing artifact files.
    pub fn io(e: fdnn_core::Error) -> Self {
        Self::from_core(e)
    }

    /// Core errors from the numerical pipeline itself.
    pub fn numeric(e: fdnn_core::Error) -> Self {
        Self::from_core(e)
    }

    /// Raw filesystem errors, tagged with the path.
    pub fn io_stage(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(fdnn_core::Error::io(path.display().to_string(), e))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Io(e) => write!(f, "file error: {e}"),
            CliError::Numeric(e) => write!(f, "numerical error: {e}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fdnn",
    version,
    about = "Reduced-order Bayesian inversion for a nonlinear diffusion-reaction model"
)]
struct Cli {
    /// TOML configuration file; omitted fields keep preset defaults.
    #[arg(short, long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Baseline preset: "paper" (the default) or "desk".
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,

    /// Output directory; overrides paths.output_dir.
    #[arg(short, long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override one configuration key, e.g. --set mcmc.steps=2000.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the parameter box and solve the forward model at each draw.
    Snapshots,
    /// Build the reduced basis and fit the network to projected snapshots.
    Train {
        /// Snapshot file (default: <out>/snapshots.bin).
        #[arg(long, value_name = "FILE")]
        snapshots: Option<PathBuf>,
    },
    /// Run the adaptive Metropolis sampler on the surrogate posterior.
    Mcmc {
        /// Sample the full-model posterior instead (no checkpoint needed).
        #[arg(long)]
        full: bool,
        /// Checkpoint file (default: <out>/checkpoint.bin).
        #[arg(long, value_name = "FILE")]
        checkpoint: Option<PathBuf>,
        /// Basis file (default: <out>/basis.bin).
        #[arg(long, value_name = "FILE")]
        basis: Option<PathBuf>,
    },
    /// Summarise a chain file: moments, intervals, autocorrelation.
    Diagnose {
        /// Chain file (default: <out>/chain.csv).
        #[arg(long, value_name = "FILE")]
        chain: Option<PathBuf>,
    },
    /// Held-out relative error of the trained surrogate at one point.
    Error {
        /// Evaluation point "x1,x2" (default: mcmc.xi_true).
        #[arg(long, value_name = "X1,X2")]
        xi: Option<String>,
        /// Checkpoint file (default: <out>/checkpoint.bin).
        #[arg(long, value_name = "FILE")]
        checkpoint: Option<PathBuf>,
        /// Basis file (default: <out>/basis.bin).
        #[arg(long, value_name = "FILE")]
        basis: Option<PathBuf>,
    },
    /// Snapshots, train, mcmc, and diagnose in one pass.
    FullRun,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Snapshots => "snapshots",
            Command::Train { .. } => "train",
            Command::Mcmc { .. } => "mcmc",
            Command::Diagnose { .. } => "diagnose",
            Command::Error { .. } => "error",
            Command::FullRun => "full_run",
        }
    }
}

fn parse_xi(text: &str) -> Result<[f64; 2], CliError> {
    let bad = || CliError::Config(format!("--xi {text:?}: expected two comma-separated numbers"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    let x1: f64 = a.trim().parse().map_err(|_| bad())?;
    let x2: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(x1.is_finite() && x2.is_finite()) {
        return Err(bad());
    }
    Ok([x1, x2])
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(
        cli.preset.as_deref(),
        cli.config.as_deref(),
        &cli.sets,
        cli.out.as_deref(),
    )?;
    let arts = prepare_run(&cfg, cli.command.name())?;
    match cli.command {
        Command::Snapshots => cmd_snapshots(&cfg, &arts),
        Command::Train { snapshots } => cmd_train(&cfg, &arts, snapshots.as_deref()),
        Command::Mcmc { full, checkpoint, basis } => {
            cmd_mcmc(&cfg, &arts, full, checkpoint.as_deref(), basis.as_deref())
        }
        Command::Diagnose { chain } => cmd_diagnose(&arts, chain.as_deref()),
        Command::Error { xi, checkpoint, basis } => {
            let xi = xi.as_deref().map(parse_xi).transpose()?;
            cmd_error(&cfg, &arts, xi, checkpoint.as_deref(), basis.as_deref()).map(|_| ())
        }
        Command::FullRun => cmd_full_run(&cfg, &arts),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
