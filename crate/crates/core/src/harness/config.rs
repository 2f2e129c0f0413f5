use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::replica_seed;
use crate::sim::SimConfig;

/// Environment variable holding the default worker count.
pub const PARALLELISM_ENV: &str = "BBM_PARALLELISM";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Template; `t_final` and `seed` are replaced per task.
    pub sim: SimConfig,
    pub t_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub trunc_levels: Vec<f64>,
    pub cluster_k: f64,
    pub cluster_b: f64,
    /// Clusters kept per record, lowest anchors first. Zero skips extraction.
    pub cluster_cap: usize,
    /// Evaluate the pair overlap for every `(gamma, beta)`.
    pub overlap: bool,
    pub n_replicas: usize,
    pub root_seed: u64,
    pub output_path: PathBuf,
    /// `None` means automatic.
    pub parallelism: Option<usize>,
    /// Record wall time per replica. Off keeps stores byte-reproducible.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(sim: SimConfig, t_grid: Vec<f64>, n_replicas: usize, output_path: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            sim,
            t_grid,
            gamma_grid: vec![1.0],
            beta_grid: vec![0.0],
            trunc_levels: Vec::new(),
            cluster_k: 6.0,
            cluster_b: 5.0,
            cluster_cap: 0,
            overlap: false,
            n_replicas,
            root_seed: 0,
            output_path: output_path.into(),
            parallelism: None,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_replicas == 0 {
            return bad("n_replicas must be at least 1".into());
        }
        if self.t_grid.is_empty() || self.gamma_grid.is_empty() || self.beta_grid.is_empty() {
            return bad("t, gamma and beta grids must be nonempty".into());
        }
        if let Some(t) = self.t_grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return bad(format!("t grid entries must be positive, got {t}"));
        }
        if let Some(g) = self.gamma_grid.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return bad(format!("gamma grid entries must be positive, got {g}"));
        }
        if let Some(b) = self.beta_grid.iter().find(|b| !b.is_finite()) {
            return bad(format!("beta grid entries must be finite, got {b}"));
        }
        if self.trunc_levels.iter().any(|k| k.is_nan()) {
            return bad("truncation levels must not be NaN".into());
        }
        if !self.sim.track_y && self.beta_grid.iter().any(|&b| b != 0.0) {
            return bad("nonzero beta requires the second coordinate to be tracked".into());
        }
        if self.cluster_cap > 0 && !(self.cluster_k > 0.0 && self.cluster_b > 0.0) {
            return bad("cluster window and depth must be positive".into());
        }
        if self.parallelism == Some(0) {
            return bad("parallelism must be at least 1".into());
        }
        let mut probe = self.sim.clone();
        probe.t_final = self.t_grid[0];
        probe.validate()
    }

    /// SHA-256 of the canonical JSON form, ignoring where and how the run executes.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_path = PathBuf::new();
        c.parallelism = None;
        c.timing = false;
        // serde_json::Value sorts object keys, which makes the text canonical
        let v = serde_json::to_value(&c).expect("config serializes");
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }
}

/// Worker count: explicit value, else the environment variable, else all cores.
pub fn resolve_parallelism(requested: Option<usize>) -> usize {
    requested
        .or_else(|| std::env::var(PARALLELISM_ENV).ok()?.trim().parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub t: f64,
    pub t_index: usize,
    pub replica_index: usize,
    pub seed: u64,
}

/// Tasks ordered by `t` index, then replica index.
pub fn plan(config: &ExperimentConfig) -> Result<Vec<Task>> {
    config.validate()?;
    let tasks: Vec<Task> = config
        .t_grid
        .iter()
        .enumerate()
        .flat_map(|(ti, &t)| {
            (0..config.n_replicas).map(move |ri| Task {
                t,
                t_index: ti,
                replica_index: ri,
                seed: replica_seed(config.root_seed, ti as u64, ri as u64),
            })
        })
        .collect();
    check_unique_seeds(&tasks)?;
    Ok(tasks)
}

pub fn check_unique_seeds(tasks: &[Task]) -> Result<()> {
    let mut seen: HashMap<u64, usize> = HashMap::with_capacity(tasks.len());
    for (i, task) in tasks.iter().enumerate() {
        if let Some(j) = seen.insert(task.seed, i) {
            let other = tasks[j];
            return Err(Error::Planning(format!(
                "seed {:#018x} shared by (t = {}, replica {}) and (t = {}, replica {})",
                task.seed, other.t, other.replica_index, task.t, task.replica_index
            )));
        }
    }
    Ok(())
}
