use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Task};
use crate::error::{Error, Result};
use crate::functionals::{
    additive_martingale, complex_partition, derivative_martingale, extract_clusters, normalization, pairwise_overlap,
    recentered_minimum, ClusterSummary,
};
use crate::sim::{global_infimum, simulate, ReplicaOutput};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionEntry {
    pub gamma: f64,
    pub beta: f64,
    /// Truncation offset `k`; absent for the full sum.
    pub trunc: Option<f64>,
    /// Unnormalized partition as `[re, im]`.
    pub value: [f64; 2],
}

impl PartitionEntry {
    pub fn raw(&self) -> Complex64 {
        Complex64::new(self.value[0], self.value[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveEntry {
    pub gamma: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapEntry {
    pub gamma: f64,
    pub beta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub schema_version: u32,
    pub config_hash: String,
    pub t: f64,
    pub replica_index: usize,
    pub seed: u64,
    pub n_leaves: usize,
    pub partitions: Vec<PartitionEntry>,
    pub additive: Vec<AdditiveEntry>,
    pub derivative: f64,
    pub recentered_min: f64,
    pub overlap: Vec<OverlapEntry>,
    pub global_inf: Option<f64>,
    pub clusters: Vec<ClusterSummary>,
    /// Clusters found before capping.
    pub clusters_total: usize,
    pub pruned_mass_bound: Vec<AdditiveEntry>,
    pub pruned_min_bound: f64,
    pub pruned_subtrees: usize,
    pub wall_time_s: f64,
}

impl ReplicaRecord {
    pub fn partition(&self, gamma: f64, beta: f64, trunc: Option<f64>) -> Option<Complex64> {
        self.partitions.iter().find(|p| p.gamma == gamma && p.beta == beta && p.trunc == trunc).map(PartitionEntry::raw)
    }

    /// `t^(3 gamma / 2)` times the raw partition.
    pub fn normalized_partition(&self, gamma: f64, beta: f64, trunc: Option<f64>) -> Option<Complex64> {
        self.partition(gamma, beta, trunc).map(|z| z * normalization(self.t, gamma))
    }

    pub fn additive(&self, gamma: f64) -> Option<f64> {
        self.additive.iter().find(|a| a.gamma == gamma).map(|a| a.value)
    }

    pub fn overlap(&self, gamma: f64, beta: f64) -> Option<f64> {
        self.overlap.iter().find(|o| o.gamma == gamma && o.beta == beta).map(|o| o.value)
    }

    /// Largest pruned-mass bound scaled to the normalized partition at `gamma`.
    pub fn pruned_bound(&self, gamma: f64) -> Option<f64> {
        self.pruned_mass_bound.iter().find(|a| a.gamma == gamma).map(|a| a.value * normalization(self.t, gamma))
    }

    pub fn is_pruned(&self) -> bool {
        self.pruned_subtrees > 0
    }

    fn non_finite_field(&self) -> Option<&'static str> {
        let bad = |v: f64| !v.is_finite();
        if self.partitions.iter().any(|p| bad(p.value[0]) || bad(p.value[1])) {
            return Some("partition");
        }
        if self.additive.iter().any(|a| bad(a.value)) {
            return Some("additive");
        }
        if bad(self.derivative) || bad(self.recentered_min) {
            return Some("derivative or minimum");
        }
        if self.overlap.iter().any(|o| bad(o.value)) {
            return Some("overlap");
        }
        if self.global_inf.is_some_and(bad) {
            return Some("global infimum");
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub schema_version: u32,
    pub config_hash: String,
    pub t: f64,
    pub replica_index: usize,
    pub seed: u64,
    pub error: String,
    /// Set when the particle ceiling was hit.
    pub ceiling: Option<u64>,
    /// Pruning removed every subtree. With a tracked minimum level this
    /// means the minimum lies above that level.
    pub all_pruned: bool,
}

/// One line of a store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StoreEntry {
    Replica(ReplicaRecord),
    Failure(FailureRecord),
}

impl StoreEntry {
    /// `(t, replica_index)` with `t` compared bitwise.
    pub fn key(&self) -> (u64, usize) {
        match self {
            StoreEntry::Replica(r) => (r.t.to_bits(), r.replica_index),
            StoreEntry::Failure(f) => (f.t.to_bits(), f.replica_index),
        }
    }

    pub fn config_hash(&self) -> &str {
        match self {
            StoreEntry::Replica(r) => &r.config_hash,
            StoreEntry::Failure(f) => &f.config_hash,
        }
    }
}

fn sorted_union_with_one(grid: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = grid.iter().copied().chain([1.0]).collect();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

fn functionals(config: &ExperimentConfig, r: &ReplicaOutput) -> Result<ReplicaRecord> {
    let mut partitions = Vec::new();
    for &gamma in &config.gamma_grid {
        for &beta in &config.beta_grid {
            for trunc in std::iter::once(None).chain(config.trunc_levels.iter().map(|&k| Some(k))) {
                let p = complex_partition(r, gamma, beta, trunc);
                partitions.push(PartitionEntry { gamma, beta, trunc, value: [p.raw.re, p.raw.im] });
            }
        }
    }
    let additive = sorted_union_with_one(&config.gamma_grid)
        .into_iter()
        .map(|gamma| AdditiveEntry { gamma, value: additive_martingale(r, gamma) })
        .collect();
    let mut overlap = Vec::new();
    if config.overlap {
        for &gamma in &config.gamma_grid {
            for &beta in &config.beta_grid {
                overlap.push(OverlapEntry { gamma, beta, value: pairwise_overlap(r, gamma, beta) });
            }
        }
    }
    let global_inf = if config.sim.track_bridge_minima { Some(global_infimum(r)?) } else { None };
    let (clusters, clusters_total) = if config.cluster_cap > 0 {
        let mut all = extract_clusters(r, config.cluster_k, config.cluster_b)?;
        let total = all.len();
        all.truncate(config.cluster_cap);
        (all, total)
    } else {
        (Vec::new(), 0)
    };
    let pruned_mass_bound = config
        .sim
        .gamma_grid
        .iter()
        .zip(&r.pruned_mass_bound)
        .map(|(&gamma, &value)| AdditiveEntry { gamma, value })
        .collect();
    Ok(ReplicaRecord {
        schema_version: SCHEMA_VERSION,
        config_hash: String::new(),
        t: r.t_final,
        replica_index: 0,
        seed: 0,
        n_leaves: r.n_leaves(),
        partitions,
        additive,
        derivative: derivative_martingale(r),
        recentered_min: recentered_minimum(r),
        overlap,
        global_inf,
        clusters,
        clusters_total,
        pruned_mass_bound,
        pruned_min_bound: r.pruned_min_bound,
        pruned_subtrees: r.pruned_subtrees,
        wall_time_s: 0.0,
    })
}

/// Simulates one task and evaluates every configured functional. Simulation
/// or evaluation errors become failure entries.
pub fn compute_entry(config: &ExperimentConfig, config_hash: &str, task: &Task) -> StoreEntry {
    let start = Instant::now();
    let mut sim = config.sim.clone();
    sim.t_final = task.t;
    sim.seed = task.seed;
    let outcome = simulate(&sim).and_then(|r| functionals(config, &r));
    let outcome = outcome.and_then(|rec| match rec.non_finite_field() {
        Some(field) => Err(Error::Degenerate(format!("non-finite {field} value"))),
        None => Ok(rec),
    });
    match outcome {
        Ok(mut rec) => {
            rec.config_hash = config_hash.to_string();
            rec.replica_index = task.replica_index;
            rec.seed = task.seed;
            if config.timing {
                rec.wall_time_s = start.elapsed().as_secs_f64();
            }
            StoreEntry::Replica(rec)
        }
        Err(e) => StoreEntry::Failure(FailureRecord {
            schema_version: SCHEMA_VERSION,
            config_hash: config_hash.to_string(),
            t: task.t,
            replica_index: task.replica_index,
            seed: task.seed,
            ceiling: match e {
                Error::ResourceLimit { ceiling, .. } => Some(ceiling),
                _ => None,
            },
            all_pruned: matches!(e, Error::AllPruned { .. }),
            error: e.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::plan;
    use crate::sim::SimConfig;

    fn cfg() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(SimConfig::exact(1.0, 0), vec![3.0], 2, "x");
        c.gamma_grid = vec![0.75, 1.5];
        c.beta_grid = vec![0.0, 0.75];
        c.trunc_levels = vec![1.0];
        c.overlap = true;
        c.cluster_cap = 2;
        c.cluster_k = 3.0;
        c.cluster_b = 1.0;
        c
    }

    #[test]
    fn record_has_every_grid_key() {
        let c = cfg();
        let tasks = plan(&c).unwrap();
        let StoreEntry::Replica(r) = compute_entry(&c, "h", &tasks[1]) else { panic!("expected a replica") };
        assert_eq!(r.partitions.len(), 2 * 2 * 2);
        assert_eq!(r.additive.iter().map(|a| a.gamma).collect::<Vec<_>>(), vec![0.75, 1.0, 1.5]);
        assert_eq!(r.overlap.len(), 4);
        assert!(r.clusters.len() <= 2 && r.clusters.len() <= r.clusters_total);
        assert_eq!((r.replica_index, r.seed, r.config_hash.as_str()), (1, tasks[1].seed, "h"));
        assert_eq!(r.wall_time_s, 0.0);
        // beta = 0 partition equals the additive martingale
        let z = r.partition(0.75, 0.0, None).unwrap();
        assert_eq!(z.re, r.additive(0.75).unwrap());
        assert_eq!(z.im, 0.0);
        let w = r.overlap(1.5, 0.0).unwrap();
        let a = r.additive(1.5).unwrap();
        assert!((w - a * a).abs() <= 1e-12 * w);
    }

    #[test]
    fn ceiling_becomes_failure() {
        let mut c = cfg();
        c.sim.particle_ceiling = 2;
        c.t_grid = vec![6.0];
        let task = plan(&c).unwrap()[0];
        match compute_entry(&c, "h", &task) {
            StoreEntry::Failure(f) => {
                assert_eq!(f.ceiling, Some(2));
                assert!(f.error.contains("ceiling"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn entries_roundtrip_through_json() {
        let c = cfg();
        let task = plan(&c).unwrap()[0];
        let e = compute_entry(&c, "h", &task);
        let line = serde_json::to_string(&e).unwrap();
        assert!(line.starts_with("{\"kind\":\"replica\""));
        let back: StoreEntry = serde_json::from_str(&line).unwrap();
        assert_eq!(back, e);
        assert_eq!(serde_json::to_string(&back).unwrap(), line);
    }
}
