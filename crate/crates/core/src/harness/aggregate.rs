use serde::{Deserialize, Serialize};

use super::record::ReplicaRecord;
use crate::error::{Error, Result};
use crate::functionals::KahanSum;
use crate::stats::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionPart {
    Re,
    Im,
    /// `|raw|^2`.
    AbsSq,
    /// `|t^(3 gamma / 2) raw|`.
    AbsNormalized,
    /// `ln |raw|`.
    LnAbs,
}

/// A scalar read from each record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Metric {
    NLeaves,
    Additive(f64),
    Derivative,
    RecenteredMin,
    Overlap {
        gamma: f64,
        beta: f64,
    },
    Partition {
        gamma: f64,
        beta: f64,
        trunc: Option<f64>,
        part: PartitionPart,
    },
    GlobalInf,
    /// Indicator of `global_inf <= level`.
    InfimumBelow(f64),
}

impl Metric {
    pub fn extract(&self, r: &ReplicaRecord) -> Option<f64> {
        match *self {
            Metric::NLeaves => Some(r.n_leaves as f64),
            Metric::Additive(g) => r.additive(g),
            Metric::Derivative => Some(r.derivative),
            Metric::RecenteredMin => Some(r.recentered_min),
            Metric::Overlap { gamma, beta } => r.overlap(gamma, beta),
            Metric::Partition { gamma, beta, trunc, part } => {
                let z = r.partition(gamma, beta, trunc)?;
                Some(match part {
                    PartitionPart::Re => z.re,
                    PartitionPart::Im => z.im,
                    PartitionPart::AbsSq => z.norm_sqr(),
                    PartitionPart::AbsNormalized => r.normalized_partition(gamma, beta, trunc)?.norm(),
                    PartitionPart::LnAbs => z.norm().ln(),
                })
            }
            Metric::GlobalInf => r.global_inf,
            Metric::InfimumBelow(level) => r.global_inf.map(|m| if m <= level { 1.0 } else { 0.0 }),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Metric::NLeaves => "n_leaves".into(),
            Metric::Additive(g) => format!("additive[gamma={g}]"),
            Metric::Derivative => "derivative".into(),
            Metric::RecenteredMin => "recentered_min".into(),
            Metric::Overlap { gamma, beta } => format!("overlap[gamma={gamma},beta={beta}]"),
            Metric::Partition { gamma, beta, trunc, part } => {
                let k = trunc.map_or("none".to_string(), |k| k.to_string());
                format!("partition.{part:?}[gamma={gamma},beta={beta},trunc={k}]")
            }
            Metric::GlobalInf => "global_inf".into(),
            Metric::InfimumBelow(l) => format!("P(global_inf<={l})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Standard error of the mean; absent for a single record.
    pub se: Option<f64>,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    /// `(q, value)` for q in 0.05, 0.25, 0.75, 0.95.
    pub quantiles: Vec<(f64, f64)>,
}

impl Summary {
    /// `|mean - target| <= k * SE`; false without an SE.
    pub fn within_se(&self, target: f64, k: f64) -> bool {
        self.se.is_some_and(|se| (self.mean - target).abs() <= k * se)
    }

    pub fn from_values(values: &[f64]) -> Result<Summary> {
        if values.is_empty() {
            return Err(Error::EmptyInput("no values to aggregate".into()));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mut s = KahanSum::default();
        v.iter().for_each(|&x| s.add(x));
        let mean = s.value() / n as f64;
        let se = (n > 1).then(|| {
            let mut ss = KahanSum::default();
            v.iter().for_each(|&x| ss.add((x - mean) * (x - mean)));
            (ss.value() / (n - 1) as f64 / n as f64).sqrt()
        });
        Ok(Summary {
            count: n,
            mean,
            se,
            median: quantile_sorted(&v, 0.5),
            min: v[0],
            max: v[n - 1],
            quantiles: [0.05, 0.25, 0.75, 0.95].iter().map(|&q| (q, quantile_sorted(&v, q))).collect(),
        })
    }
}

/// Summary of `metric` over `records`. Values are sorted before summation,
/// so any permutation of the records gives an identical summary.
pub fn aggregate<'a, I>(records: I, metric: &Metric) -> Result<Summary>
where
    I: IntoIterator<Item = &'a ReplicaRecord>,
{
    let mut values = Vec::new();
    for r in records {
        match metric.extract(r) {
            Some(v) => values.push(v),
            None => {
                return Err(Error::MissingData(format!(
                    "record (t = {}, replica {}) has no {}",
                    r.t,
                    r.replica_index,
                    metric.label()
                )))
            }
        }
    }
    if values.is_empty() {
        return Err(Error::MissingData(format!("no records carry {}", metric.label())));
    }
    Summary::from_values(&values)
}
