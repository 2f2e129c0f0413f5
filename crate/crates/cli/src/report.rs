use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;

use bbm_core::harness::{aggregate, Metric, PartitionPart, ReplicaRecord, Sidecar, Summary};
use bbm_core::Result;

use crate::util::{header, load_gates, load_store, with_ext, write};
use crate::{CommandResult, GatesArg};

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// Artifact prefix; `.csv` and `.txt` are appended [default: <store>.report].
    #[arg(long, value_name = "PREFIX")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub gates: GatesArg,
}

/// Every metric present in the first record of a `t` batch.
fn metrics(r: &ReplicaRecord) -> Vec<Metric> {
    let mut m = vec![Metric::NLeaves, Metric::Derivative, Metric::RecenteredMin];
    m.extend(r.additive.iter().map(|a| Metric::Additive(a.gamma)));
    for p in &r.partitions {
        let (gamma, beta, trunc) = (p.gamma, p.beta, p.trunc);
        m.push(Metric::Partition { gamma, beta, trunc, part: PartitionPart::AbsNormalized });
        m.push(Metric::Partition { gamma, beta, trunc, part: PartitionPart::LnAbs });
    }
    m.extend(r.overlap.iter().map(|o| Metric::Overlap { gamma: o.gamma, beta: o.beta }));
    if r.global_inf.is_some() {
        m.push(Metric::GlobalInf);
    }
    m
}

/// CSV columns: t, metric, count, mean, se, median, min, max, q05, q25, q75, q95.
pub fn run(args: ReportArgs) -> Result<CommandResult> {
    let gates = load_gates(args.gates.gates.as_deref())?;
    let store = load_store(&args.store)?;
    let prefix = args.out.unwrap_or_else(|| with_ext(&args.store, "report"));

    let mut text = header("store report", &args.store, &gates);
    if let Some(sc) = Sidecar::read(&args.store)? {
        let _ = writeln!(text, "## config (hash {})\n{}\n", sc.config_hash, serde_json::to_string_pretty(&sc.config)?);
    }
    let mut csv = String::from("t,metric,count,mean,se,median,min,max,q05,q25,q75,q95\n");
    for t in store.t_values() {
        let recs: Vec<&ReplicaRecord> = {
            let mut v: Vec<_> = store.replicas().filter(|r| r.t == t).collect();
            v.sort_by_key(|r| r.replica_index);
            v
        };
        let failures = store.failures().filter(|f| f.t == t).count();
        let pruned = recs.iter().filter(|r| r.is_pruned()).count();
        let _ = writeln!(text, "## t = {t}: {} replicas, {failures} failures, {pruned} pruned", recs.len());
        for m in metrics(recs[0]) {
            let s: Summary = match aggregate(recs.iter().copied(), &m) {
                Ok(s) => s,
                Err(e) => {
                    let _ = writeln!(text, "{}: {e}", m.label());
                    continue;
                }
            };
            let se = s.se.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(text, "{} mean={} se={se} median={}", m.label(), s.mean, s.median);
            let q: Vec<String> = s.quantiles.iter().map(|(_, v)| v.to_string()).collect();
            let _ = writeln!(
                csv,
                "{t},\"{}\",{},{},{se},{},{},{},{}",
                m.label(),
                s.count,
                s.mean,
                s.median,
                s.min,
                s.max,
                q.join(",")
            );
        }
        text.push('\n');
    }
    let mut failed: Vec<_> = store.failures().collect();
    failed.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.replica_index.cmp(&b.replica_index)));
    if !failed.is_empty() {
        text.push_str("## failures\n");
        for f in failed {
            let _ = writeln!(text, "t={} replica={} seed={}: {}", f.t, f.replica_index, f.seed, f.error);
        }
    }
    let artifacts = vec![write(&with_ext(&prefix, "csv"), &csv)?, write(&with_ext(&prefix, "txt"), &text)?];
    Ok(CommandResult::ok(artifacts))
}
