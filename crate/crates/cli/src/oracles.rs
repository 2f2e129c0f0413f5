use std::path::PathBuf;

use clap::Args;

use bbm_core::analysis::oracle_checks;
use bbm_core::Result;

use crate::util::{checks_csv, checks_text, header, load_gates, load_store, with_ext, write};
use crate::{CommandResult, GatesArg};

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// Text report [default: <store>.oracles.txt]; a CSV with the same stem is written next to it.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub gates: GatesArg,
}

pub fn run(args: OracleArgs) -> Result<CommandResult> {
    let gates = load_gates(args.gates.gates.as_deref())?;
    let store = load_store(&args.store)?;
    let checks = oracle_checks(&store, &gates)?;
    let failed = checks.iter().filter(|c| !c.pass).count();

    let report = args.report.unwrap_or_else(|| with_ext(&args.store, "oracles.txt"));
    let mut body = header("oracle gates", &args.store, &gates);
    body.push_str(&checks_text(&checks));
    body.push_str(&format!("\n{} checks, {failed} failed\n", checks.len()));
    print!("{}", checks_text(&checks));
    let artifacts = vec![write(&report, &body)?, write(&report.with_extension("csv"), &checks_csv(&checks))?];
    Ok(CommandResult { exit_code: if failed == 0 { 0 } else { 3 }, artifacts })
}
