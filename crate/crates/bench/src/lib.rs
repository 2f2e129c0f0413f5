//! Fixtures shared by the criterion benches.

use bbm_core::{simulate, ReplicaOutput, SimConfig};

/// Exact replica with both coordinates.
pub fn exact_replica(t: f64, seed: u64) -> ReplicaOutput {
    simulate(&SimConfig::exact(t, seed)).expect("exact replica")
}

/// Pruned configuration used by the tail and cluster experiments.
pub fn pruned_config(t: f64, seed: u64) -> SimConfig {
    let mut c = SimConfig::exact(t, seed);
    c.prune_epsilon = Some(1e-6);
    c.gamma_grid = vec![0.75, 0.8, 1.0];
    c.track_min_level = Some(4.0);
    c
}
