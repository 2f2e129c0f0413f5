//! Tolerances and analysis defaults. Every report echoes the full table
//! together with [`GATES_VERSION`] so a verdict can be traced to the
//! thresholds that produced it.

use serde::{Deserialize, Serialize};

/// Bumped whenever any value in [`Gates::default`] changes.
pub const GATES_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gates {
    pub version: u32,
    /// Oracle gates: `|mean - oracle| <= se_multiplier * SE`.
    pub se_multiplier: f64,
    /// One-sided infimum gate: `P(inf <= -k) <= exp(-k) + infimum_se_multiplier * SE`.
    pub infimum_se_multiplier: f64,
    /// Hill tail index within `1/gamma * (1 +- hill_rel_tol)`.
    pub hill_rel_tol: f64,
    pub tails_min_samples: usize,
    /// CF fit: `|p_hat - 1/gamma| <= cf_p_abs_tol`.
    pub cf_p_abs_tol: f64,
    pub cf_p_interval: (f64, f64),
    /// Radial grid of the CF fit, in units of the sample median modulus.
    pub cf_grid_lo: f64,
    pub cf_grid_hi: f64,
    pub cf_grid_points: usize,
    /// Synthetic recovery of the fitter, relative.
    pub cf_synthetic_rel_tol: f64,
    /// Minimum p-value for the uniform-angle and rotation tests.
    pub ks_min_p: f64,
    pub rotation_theta: f64,
    /// Anchor-intensity slope within `1 +- slope_abs_tol`; also the Bramson
    /// left-tail slope.
    pub slope_abs_tol: f64,
    pub ppp_window: (f64, f64),
    pub ppp_bins: usize,
    pub bramson_tail_window: (f64, f64),
    pub bramson_tail_bins: usize,
    /// Spread of the median recentered minimum across `t`.
    pub bramson_max_drift: f64,
    /// Normalization exponent within `-3 gamma / 2 * (1 +- phase_rel_tol)`.
    pub phase_rel_tol: f64,
    pub cluster_k: f64,
    pub cluster_b: f64,
    pub cluster_cap: usize,
    /// Pruned vs exact: `|dZ_normalized| <= prune_fidelity_factor * certificate`.
    pub prune_fidelity_factor: f64,
    pub overlap_rel_tol: f64,
}

impl Default for Gates {
    fn default() -> Self {
        Gates {
            version: GATES_VERSION,
            se_multiplier: 4.0,
            infimum_se_multiplier: 3.0,
            hill_rel_tol: 0.25,
            tails_min_samples: 1000,
            cf_p_abs_tol: 0.2,
            cf_p_interval: (0.5, 2.0),
            cf_grid_lo: 0.05,
            cf_grid_hi: 2.0,
            cf_grid_points: 16,
            cf_synthetic_rel_tol: 0.10,
            ks_min_p: 0.01,
            rotation_theta: std::f64::consts::FRAC_PI_3,
            slope_abs_tol: 0.3,
            ppp_window: (0.0, 3.0),
            ppp_bins: 6,
            bramson_tail_window: (-6.0, -2.0),
            bramson_tail_bins: 8,
            bramson_max_drift: 0.6,
            phase_rel_tol: 0.25,
            cluster_k: 6.0,
            cluster_b: 5.0,
            cluster_cap: 64,
            prune_fidelity_factor: 10.0,
            overlap_rel_tol: 1e-12,
        }
    }
}

impl Gates {
    /// Geometric radial grid scaled by `scale` (typically the median `|z|^-1`).
    pub fn cf_grid(&self, scale: f64) -> Vec<f64> {
        let n = self.cf_grid_points.max(2);
        let (lo, hi) = (self.cf_grid_lo.ln(), self.cf_grid_hi.ln());
        (0..n).map(|i| scale * (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()).collect()
    }

    /// Hill order `floor(n^(2/3))`.
    pub fn hill_k(&self, n: usize) -> usize {
        crate::stats::default_hill_k(n)
    }

    /// Plain `key = value` listing for text reports.
    pub fn to_text(&self) -> String {
        let v = serde_json::to_value(self).expect("gates serialize");
        let mut out = String::new();
        if let serde_json::Value::Object(map) = v {
            for (k, v) in map {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip() {
        let g = Gates::default();
        let s = serde_json::to_string(&g).unwrap();
        let back: Gates = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
        assert_eq!(back.version, GATES_VERSION);
        assert!(g.to_text().contains("se_multiplier = 4.0"));
    }

    #[test]
    fn grid_is_geometric() {
        let g = Gates::default();
        let grid = g.cf_grid(2.0);
        assert_eq!(grid.len(), g.cf_grid_points);
        assert!((grid[0] - 0.1).abs() < 1e-12);
        assert!((grid[grid.len() - 1] - 4.0).abs() < 1e-12);
    }
}
