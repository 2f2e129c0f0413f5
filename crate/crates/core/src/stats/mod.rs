//! Statistical verification: characteristic-function fitting, tail indices,
//! circular uniformity and regression helpers.

mod ecf;
mod hill;
mod ks;
mod optimize;
mod phase;
mod regression;

pub use ecf::{
    empirical_cf, fit_stable_mixture, mixture_residual, positive_stable, rotational_ecf, synthetic_mixture, CfFit,
    ECF_DIRECTIONS,
};
pub use hill::{default_hill_k, hill_estimator};
pub use ks::{
    kolmogorov_pvalue, ks_two_sample, ks_uniform, ks_uniform_angle, kuiper_uniform_angle, rotation_invariance_test,
};
pub use optimize::{nelder_mead, NelderMeadResult};
pub use phase::{in_phase_two, phase_scan, PhaseCell, PhaseCellInput, PhaseLabel};
pub use regression::{slope_regression, LinearFit};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Linear-interpolated sample quantile (type 7) of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
    }
}
