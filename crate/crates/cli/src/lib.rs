//! Command surface of the `bbm` binary.
//!
//! Every command writes plain data artifacts (CSV, text, gnuplot grids, SVG)
//! whose bodies depend only on the flags and the store, never on the clock.

mod analyze;
mod oracles;
mod phase;
mod report;
mod simulate;
mod util;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use bbm_core::harness::error_exit_code;
use bbm_core::Error;

/// Outcome of one command: its exit status and the files it wrote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
}

impl CommandResult {
    fn ok(artifacts: Vec<PathBuf>) -> Self {
        CommandResult { exit_code: 0, artifacts }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bbm", version, about = "Monte Carlo experiments on two-coordinate branching Brownian motion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a replica farm into an append-only store (resumes an existing one).
    Simulate(simulate::SimulateArgs),
    /// Gate store means against their closed-form expectations.
    ValidateOracles(oracles::OracleArgs),
    /// Statistical analyses of a store.
    #[command(subcommand)]
    Analyze(analyze::AnalyzeCommand),
    /// Classify a grid of (gamma, beta) cells by the decay of the median partition.
    ScanPhase(phase::ScanArgs),
    /// Summary statistics of every quantity in a store.
    Report(report::ReportArgs),
}

/// Flags shared by the commands that apply gates.
#[derive(Debug, Clone, Args)]
pub struct GatesArg {
    /// JSON file overriding the built-in gates table.
    #[arg(long, value_name = "FILE")]
    pub gates: Option<PathBuf>,
}

/// Runs the command line `args` (including the program name) and returns the
/// process exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(r) => {
            for a in &r.artifacts {
                println!("{}", a.display());
            }
            r.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_exit_code(&e)
        }
    }
}

pub fn dispatch(command: Command) -> Result<CommandResult, Error> {
    match command {
        Command::Simulate(a) => simulate::run(a),
        Command::ValidateOracles(a) => oracles::run(a),
        Command::Analyze(a) => analyze::run(a),
        Command::ScanPhase(a) => phase::run(a),
        Command::Report(a) => report::run(a),
    }
}
