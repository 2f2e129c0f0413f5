use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};

use bbm_core::analysis::{
    anchor_histogram, bramson_analysis, cf_fit_analysis, cf_synthetic_pregate, infimum_checks, isotropy_checks,
    normalized_moduli, partition_pairs, ppp_slope_check, tail_check, Check,
};
use bbm_core::gates::Gates;
use bbm_core::harness::Store;
use bbm_core::stats::hill_estimator;
use bbm_core::{Error, Result};

use crate::util::{checks_text, header, load_gates, load_store, with_ext, write};
use crate::{CommandResult, GatesArg};

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub store: PathBuf,
    /// Artifact prefix; `.csv` and `.txt` are appended [default: <store>.<analysis>].
    #[arg(long, value_name = "PREFIX")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub gates: GatesArg,
}

#[derive(Debug, Clone, Subcommand)]
pub enum AnalyzeCommand {
    /// Stable-mixture fit of the characteristic function of (Z, D) pairs.
    ///
    /// CSV columns: radius, ecf (rotationally averaged), model (fitted mixture).
    CfFit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.8)]
        gamma: f64,
        #[arg(long, default_value_t = 0.8)]
        beta: f64,
        /// Seed of the synthetic recovery pre-gate.
        #[arg(long, default_value_t = 1)]
        pregate_seed: u64,
    },
    /// Hill tail index of |normalized Z| against 1/gamma.
    ///
    /// CSV columns: k, hill (the estimate over a range of orders).
    Tails {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.75)]
        beta: f64,
        /// Number of upper order statistics [default: floor(n^(2/3))].
        #[arg(long)]
        hill_k: Option<usize>,
    },
    /// Uniform-angle and rotation tests of the normalized partition.
    ///
    /// CSV columns: replica_index, re, im, angle.
    Isotropy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.8)]
        gamma: f64,
        #[arg(long, default_value_t = 0.8)]
        beta: f64,
    },
    /// Global-infimum bound and, when clusters were recorded, the anchor intensity.
    ///
    /// CSV columns: series (infimum | anchors), x, y.
    Extremes {
        #[command(flatten)]
        common: Common,
    },
    /// Stability of the recentered minimum across t and its left tail.
    ///
    /// CSV columns: series (median | tail), x, y.
    Bramson {
        #[command(flatten)]
        common: Common,
    },
}

struct Output {
    checks: Vec<Check>,
    notes: Vec<String>,
    csv: String,
}

pub fn run(cmd: AnalyzeCommand) -> Result<CommandResult> {
    let (name, common) = match &cmd {
        AnalyzeCommand::CfFit { common, .. } => ("cf-fit", common),
        AnalyzeCommand::Tails { common, .. } => ("tails", common),
        AnalyzeCommand::Isotropy { common, .. } => ("isotropy", common),
        AnalyzeCommand::Extremes { common } => ("extremes", common),
        AnalyzeCommand::Bramson { common } => ("bramson", common),
    };
    let gates = load_gates(common.gates.gates.as_deref())?;
    let store = load_store(&common.store)?;
    let out = match &cmd {
        AnalyzeCommand::CfFit { gamma, beta, pregate_seed, .. } => {
            cf_fit(&store, *gamma, *beta, *pregate_seed, &gates)?
        }
        AnalyzeCommand::Tails { gamma, beta, hill_k, .. } => tails(&store, *gamma, *beta, *hill_k, &gates)?,
        AnalyzeCommand::Isotropy { gamma, beta, .. } => isotropy(&store, *gamma, *beta, &gates)?,
        AnalyzeCommand::Extremes { .. } => extremes(&store, &gates)?,
        AnalyzeCommand::Bramson { .. } => bramson(&store, &gates)?,
    };
    let prefix = common.out.clone().unwrap_or_else(|| with_ext(&common.store, name));
    let artifacts = emit(&prefix, name, &common.store, &gates, &out)?;
    print!("{}", checks_text(&out.checks));
    Ok(CommandResult::ok(artifacts))
}

fn emit(prefix: &Path, name: &str, store: &Path, gates: &Gates, out: &Output) -> Result<Vec<PathBuf>> {
    let mut body = header(&format!("analyze {name}"), store, gates);
    body.push_str("## results\n");
    body.push_str(&checks_text(&out.checks));
    for n in &out.notes {
        let _ = writeln!(body, "note: {n}");
    }
    let verdict = if out.checks.iter().all(|c| c.pass) { "PASS" } else { "FAIL" };
    let _ = writeln!(body, "\nverdict: {verdict}");
    Ok(vec![write(&with_ext(prefix, "csv"), &out.csv)?, write(&with_ext(prefix, "txt"), &body)?])
}

fn cf_fit(store: &Store, gamma: f64, beta: f64, seed: u64, gates: &Gates) -> Result<Output> {
    let mut checks = cf_synthetic_pregate(gates, seed)?;
    let pairs = partition_pairs(store, gamma, beta)?;
    let rep = cf_fit_analysis(&pairs, gamma, gates)?;
    let d: Vec<f64> = pairs.iter().map(|p| p.1).filter(|d| *d > 0.0 && d.is_finite()).collect();
    let (c, p) = (rep.fit.c_hat, rep.fit.p_hat);
    let mut csv = String::from("radius,ecf,model\n");
    for (r, e) in rep.fit.grid.iter().zip(&rep.ecf) {
        let model = d.iter().map(|dj| (-c * dj * r.powf(p)).exp()).sum::<f64>() / d.len() as f64;
        let _ = writeln!(csv, "{r},{e},{model}");
    }
    let notes = vec![format!("c_hat = {c}"), format!("p_hat = {p}"), format!("pairs = {}", pairs.len())];
    checks.push(rep.check);
    Ok(Output { checks, notes, csv })
}

fn tails(store: &Store, gamma: f64, beta: f64, k: Option<usize>, gates: &Gates) -> Result<Output> {
    let v = normalized_moduli(store, gamma, beta)?;
    let check = tail_check(&format!("Hill |Z_norm| (gamma={gamma},beta={beta})"), &v, gamma, k, gates)?;
    let pos: Vec<f64> = v.iter().copied().filter(|x| *x > 0.0).collect();
    let n = pos.len();
    let mut csv = String::from("k,hill\n");
    let mut ks: Vec<usize> = (0..40)
        .map(|i| (10.0 * ((n - 1) as f64 / 10.0).powf(i as f64 / 39.0)) as usize)
        .filter(|&k| k >= 2 && k < n)
        .collect();
    ks.dedup();
    for k in ks {
        if let Ok(a) = hill_estimator(&pos, k) {
            let _ = writeln!(csv, "{k},{a}");
        }
    }
    Ok(Output { checks: vec![check], notes: vec![format!("target 1/gamma = {}", 1.0 / gamma)], csv })
}

fn isotropy(store: &Store, gamma: f64, beta: f64, gates: &Gates) -> Result<Output> {
    let pairs = partition_pairs(store, gamma, beta)?;
    let t = *store.t_values().last().expect("nonempty store");
    let mut rows: Vec<(usize, f64, f64)> = store
        .replicas()
        .filter(|r| r.t == t)
        .filter_map(|r| r.normalized_partition(gamma, beta, None).map(|z| (r.replica_index, z.re, z.im)))
        .collect();
    rows.sort_by_key(|r| r.0);
    let mut csv = String::from("replica_index,re,im,angle\n");
    for (i, re, im) in rows {
        let _ = writeln!(csv, "{i},{re},{im},{}", im.atan2(re));
    }
    let z: Vec<_> = pairs.iter().map(|p| p.0).collect();
    let checks = isotropy_checks(&z, gates)?;
    let mut notes = vec![format!("t = {t}, samples = {}", z.len())];
    if beta == 0.0 {
        notes.push("beta = 0: the partition is real-valued, so its angles are degenerate and the uniform-angle tests are expected to fail".into());
    }
    Ok(Output { checks, notes, csv })
}

fn extremes(store: &Store, gates: &Gates) -> Result<Output> {
    if store.replicas().any(|r| r.global_inf.is_none()) {
        return Err(Error::MissingData("store has no global infimum; simulate with --bridge-minima".into()));
    }
    let mut checks = infimum_checks(store, gates)?;
    let mut csv = String::from("series,x,y\n");
    for (k, c) in checks.iter().enumerate() {
        let _ = writeln!(csv, "infimum,{},{}", k + 1, c.value);
    }
    let mut notes = Vec::new();
    if store.replicas().any(|r| r.clusters_total > 0) {
        let (hist, _) = anchor_histogram(store, gates.ppp_window, gates.ppp_bins)?;
        for (x, c) in hist {
            let _ = writeln!(csv, "anchors,{x},{c}");
        }
        checks.push(ppp_slope_check(store, gates)?);
    } else {
        notes.push("no clusters recorded; anchor intensity skipped (simulate with --cluster-cap)".into());
    }
    Ok(Output { checks, notes, csv })
}

fn bramson(store: &Store, gates: &Gates) -> Result<Output> {
    let rep = bramson_analysis(store, gates)?;
    let mut csv = String::from("series,x,y\n");
    for (t, _, m) in &rep.medians {
        let _ = writeln!(csv, "median,{t},{m}");
    }
    for (x, p) in &rep.tail {
        let _ = writeln!(csv, "tail,{x},{p}");
    }
    let censored = store.failures().filter(|f| f.all_pruned).count();
    let notes = vec![format!("replicas lost entirely to pruning, counted as +inf: {censored}")];
    Ok(Output { checks: rep.checks, notes, csv })
}
