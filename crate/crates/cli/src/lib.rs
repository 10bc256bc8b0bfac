//! `csafsim`: experiment harness binding workload generation, simulation
//! and measurement into reproducible CSV-producing runs.

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::output::OutDir;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 2;

/// Harness failures, split by exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad configuration or input data (exit 1).
    Config(String),
    /// Filesystem failure (exit 2).
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "csafsim",
    version,
    about = "Trace-driven branch prediction simulator with context-switch-aware resets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured workload as a trace file
    Gen(RunArgs),
    /// Run one simulation; emit series, per-process and switch CSVs
    Simulate(RunArgs),
    /// Run baseline, csaf and both always-reset policies side by side
    Compare(RunArgs),
    /// Apply periodic invert/reset disturbances and measure the spikes
    Transient(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (flat key = value lines)
    config: PathBuf,
    /// Override a config key after file parsing; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn load_config(args: &RunArgs) -> Result<config::ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", args.config.display())))?;
    config::parse_config_with_overrides(&text, &args.set)
}

/// Output directory: `CSAFSIM_OUT` overrides the config's `out_dir`.
fn resolve_out_dir(config: &config::ExperimentConfig) -> PathBuf {
    match std::env::var_os("CSAFSIM_OUT") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => config.out_dir.clone(),
    }
}

type CommandFn = fn(&config::ExperimentConfig, &mut OutDir) -> Result<(), CliError>;

fn dispatch(command: &Command) -> Result<Vec<PathBuf>, CliError> {
    let (args, run): (&RunArgs, CommandFn) = match command {
        Command::Gen(a) => (a, commands::gen),
        Command::Simulate(a) => (a, commands::simulate),
        Command::Compare(a) => (a, commands::compare),
        Command::Transient(a) => (a, commands::transient),
    };
    let config = load_config(args)?;
    let mut out = OutDir::new(resolve_out_dir(&config));
    match run(&config, &mut out) {
        Ok(()) => Ok(out.written().to_vec()),
        Err(e) => {
            // never leave partial outputs behind
            out.remove_written();
            Err(e)
        }
    }
}

/// Parse argv and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(written) => {
            for path in written {
                println!("wrote {}", path.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
