use std::path::PathBuf;

use clap::Args;

use bbm_core::harness::{exit_code, run as run_farm, sidecar_path, ExperimentConfig};
use bbm_core::sim::DEFAULT_PARTICLE_CEILING;
use bbm_core::{Result, SimConfig};

use crate::util::Parallelism;
use crate::CommandResult;

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Final times, one replica batch per value.
    #[arg(long, value_delimiter = ',', default_value = "3", value_name = "T,..")]
    pub t_grid: Vec<f64>,
    /// Decay exponents of the recorded partition functions.
    #[arg(long, value_delimiter = ',', default_value = "1", value_name = "G,..")]
    pub gamma_grid: Vec<f64>,
    /// Phase parameters of the recorded partition functions.
    #[arg(long, value_delimiter = ',', default_value = "0", value_name = "B,..")]
    pub beta_grid: Vec<f64>,
    /// Replicas per final time.
    #[arg(long, default_value_t = 100)]
    pub replicas: usize,
    /// Root seed; per-replica seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// First-moment pruning threshold [default: off, exact simulation].
    #[arg(long, value_name = "EPS")]
    pub prune_eps: Option<f64>,
    /// Exponents whose certificates gate pruning, each > 1/2 [default: the gamma grid].
    #[arg(long, value_delimiter = ',', value_name = "G,..")]
    pub prune_gammas: Option<Vec<f64>>,
    /// Keep subtrees that may reach below (3/2) ln t + K [default: off].
    #[arg(long, value_name = "K", allow_negative_numbers = true)]
    pub track_min_level: Option<f64>,
    /// Do not simulate the second coordinate (requires a zero beta grid).
    #[arg(long)]
    pub no_track_y: bool,
    /// Sample bridge minima along every branch to record the global infimum.
    #[arg(long)]
    pub bridge_minima: bool,
    /// Truncation offsets k of additional partition sums [default: none].
    #[arg(long, value_delimiter = ',', value_name = "K,..", allow_negative_numbers = true)]
    pub trunc_levels: Vec<f64>,
    /// Record the pairwise overlap at every (gamma, beta).
    #[arg(long)]
    pub overlap: bool,
    /// Cluster window above (3/2) ln t.
    #[arg(long, default_value_t = 6.0)]
    pub cluster_k: f64,
    /// Cluster genealogical depth.
    #[arg(long, default_value_t = 5.0)]
    pub cluster_b: f64,
    /// Clusters kept per replica; 0 skips cluster extraction.
    #[arg(long, default_value_t = 0)]
    pub cluster_cap: usize,
    /// Abort a replica past this many particles.
    #[arg(long, default_value_t = DEFAULT_PARTICLE_CEILING)]
    pub particle_ceiling: u64,
    /// Store path (JSON lines); the config is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads, or `auto` (BBM_PARALLELISM, else all cores).
    #[arg(long, default_value = "auto")]
    pub parallelism: Parallelism,
    /// Record per-replica wall time (makes stores differ between runs).
    #[arg(long)]
    pub timing: bool,
}

impl SimulateArgs {
    pub fn config(&self) -> ExperimentConfig {
        let mut gammas = self.prune_gammas.clone().unwrap_or_else(|| {
            let g: Vec<f64> = self.gamma_grid.iter().copied().filter(|g| *g > 0.5).collect();
            if g.is_empty() {
                vec![1.0]
            } else {
                g
            }
        });
        gammas.sort_by(f64::total_cmp);
        gammas.dedup();
        let sim = SimConfig {
            t_final: 1.0,
            seed: 0,
            prune_epsilon: self.prune_eps,
            gamma_grid: gammas,
            track_min_level: self.track_min_level,
            track_y: !self.no_track_y,
            track_bridge_minima: self.bridge_minima,
            particle_ceiling: self.particle_ceiling,
        };
        let mut c = ExperimentConfig::new(sim, self.t_grid.clone(), self.replicas, self.out.clone());
        c.gamma_grid = self.gamma_grid.clone();
        c.beta_grid = self.beta_grid.clone();
        c.trunc_levels = self.trunc_levels.clone();
        c.cluster_k = self.cluster_k;
        c.cluster_b = self.cluster_b;
        c.cluster_cap = self.cluster_cap;
        c.overlap = self.overlap;
        c.root_seed = self.seed;
        c.parallelism = self.parallelism.0;
        c.timing = self.timing;
        c
    }
}

pub fn run(args: SimulateArgs) -> Result<CommandResult> {
    let config = args.config();
    config.validate()?;
    let outcome = run_farm(&config);
    let code = exit_code(&outcome);
    let s = outcome?;
    eprintln!("planned {} skipped {} completed {} failed {}", s.planned, s.skipped, s.completed, s.failed);
    Ok(CommandResult {
        exit_code: code,
        artifacts: vec![config.output_path.clone(), sidecar_path(&config.output_path)],
    })
}
