use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pucci_core::Error;
use thiserror::Error as ThisError;

mod baseline;
mod commands;
mod config;
mod verify;

use config::{CommonArgs, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "pucci", version, about = "Critical exponents and concentrating solutions for Pucci extremal operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bisect for the critical exponent and write the fast-decay profile.
    Critical(CommonArgs),
    /// Solve on the unit ball for `--p` or `--eps` below the critical exponent.
    Ball(CommonArgs),
    /// Critical exponents and constants over a grid of Λ/λ ratios.
    Sweep(CommonArgs),
    /// Run verification suites and report each assertion.
    Verify(CommonArgs),
    /// Export the Emden-Fowler trajectory of a shot.
    Phase(CommonArgs),
}

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("empty parameter grid")]
    EmptyGrid,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::BracketViolated { .. } | Error::Supercritical { .. }) => 2,
            _ => 1,
        }
    }
}

fn init_pool() {
    let threads = std::env::var("PUCCI_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0);
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_pool();
    let (args, run): (CommonArgs, fn(&RunConfig) -> Result<u8, CliError>) = match cli.command {
        Command::Critical(a) => (a, commands::critical),
        Command::Ball(a) => (a, commands::ball),
        Command::Sweep(a) => (a, commands::sweep),
        Command::Verify(a) => (a, verify::run),
        Command::Phase(a) => (a, commands::phase),
    };
    let result = RunConfig::resolve(args).and_then(|cfg| run(&cfg));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            match &e {
                CliError::Core(Error::Supercritical { p, p_star }) => {
                    eprintln!("error: supercritical: no solution (p = {p}, p* = {p_star})")
                }
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
