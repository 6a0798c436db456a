//! Command-line front end for `glfield`: configuration parsing, experiment
//! orchestration and bit-stable result emission.
//!
//! Exit codes: 0 success, 2 input error, 3 spectral failure, 4 unconverged
//! (the report is still written), 1 anything else.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod format;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::{Output, Status, SWEEP_HEADER};
pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("spectral failure: {0}")]
    Spectral(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Spectral(_) => 3,
            CliError::Solver(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "glfield", version, about = "Ginzburg-Landau fields on triangulated surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed; overrides `seed` in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; overrides `[output] path`. Standard output otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel starts and sweep points.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mesh statistics as JSON.
    MeshInfo(Common),
    /// Lowest magnetic Laplacian eigenvalue over flat holonomies, as JSON.
    Lambda1(Common),
    /// Descend from one start to a critical point, as JSON.
    Minimize(Common),
    /// Classify a grid of couplings, as CSV.
    Sweep(Common),
    /// Cluster the energies reached from many starts, as JSON.
    CriticalValues(Common),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::MeshInfo(c)
            | Command::Lambda1(c)
            | Command::Minimize(c)
            | Command::Sweep(c)
            | Command::CriticalValues(c) => c,
        }
    }
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Run one command with an already loaded configuration.
pub fn execute(command: &Command, config: &RunConfig) -> Result<Output, CliError> {
    let seed = command.common().seed.unwrap_or(config.seed);
    match command {
        Command::MeshInfo(_) => commands::mesh_info(config),
        Command::Lambda1(_) => commands::lambda1_cmd(config),
        Command::Minimize(_) => commands::minimize_cmd(config, seed),
        Command::Sweep(_) => commands::sweep_cmd(config, seed),
        Command::CriticalValues(_) => commands::critical_values_cmd(config, seed),
    }
}

/// Load the configuration, run, and write the result. Returns the exit code.
pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let common = cli.command.common();
    let config = RunConfig::load(&common.config)?;
    let output = match common.threads {
        Some(0) => return Err(CliError::Input("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Input(e.to_string()))?
            .install(|| execute(&cli.command, &config))?,
        None => execute(&cli.command, &config)?,
    };
    let target = common.out.clone().or_else(|| config.output.path.as_ref().map(|p| config.resolve(p)));
    match target {
        Some(path) => write_file(&path, &output.body)?,
        None => print!("{}", output.body),
    }
    Ok(output.status.code())
}
