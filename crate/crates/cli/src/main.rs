//! `imfree` command-line front end.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::Loaded;
use output::OutDir;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "imfree",
    version,
    about = "Fisher information, antiunitary symmetries and optimal measurements"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV/JSON output (overrides `[output] dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for simulations (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// QFIM, Uhlmann curvature, compatibility flags and symmetry search.
    Analyze,
    /// Classical Fisher information and efficiency of a measurement.
    PovmEval,
    /// Phase variance of the two reference bases on depolarized antiparallel spins.
    Fig3,
    /// Repeated experiments with maximum-likelihood estimation.
    Simulate,
    /// Antiunitary asymmetry measures over points.
    Asymmetry,
    /// Model zoo.
    Zoo {
        #[command(subcommand)]
        what: ZooCommand,
    },
}

#[derive(Subcommand)]
enum ZooCommand {
    /// Models, their parameters and symmetries, and canonical measurements.
    List,
}

fn load(path: Option<&Path>, required: bool) -> Result<Loaded, CliError> {
    match path {
        Some(p) => Loaded::read(p),
        None if required => Err(CliError::Config(
            "this command needs --config <path>".into(),
        )),
        None => Ok(Loaded::empty()),
    }
}

fn run(cli: Cli) -> Result<commands::Run, CliError> {
    if let Command::Zoo {
        what: ZooCommand::List,
    } = cli.command
    {
        return Ok(commands::zoo_list());
    }
    let required = !matches!(cli.command, Command::Fig3);
    let cfg = load(cli.config.as_deref(), required)?;
    let out = cfg
        .out_dir(cli.out.as_deref())
        .map(|p| OutDir::create(&p))
        .transpose()?;
    match cli.command {
        Command::Analyze => commands::analyze(&cfg, out),
        Command::PovmEval => commands::povm_eval(&cfg, out),
        Command::Fig3 => commands::fig3(&cfg, out),
        Command::Simulate => commands::simulate(&cfg, out, cli.seed),
        Command::Asymmetry => commands::asymmetry(&cfg, out),
        Command::Zoo { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(r) => {
            print!("{}", r.report);
            for f in &r.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("imfree: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
