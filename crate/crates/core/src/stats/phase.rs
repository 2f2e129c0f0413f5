use serde::{Deserialize, Serialize};

use super::median;
use super::regression::ols;
use crate::error::{Error, Result};

/// Samples of `ln |raw partition|` for one `(gamma, beta)` cell, grouped by `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCellInput {
    pub gamma: f64,
    pub beta: f64,
    pub by_t: Vec<(f64, Vec<f64>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseLabel {
    PhaseIIConsistent,
    Other,
}

impl PhaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseLabel::PhaseIIConsistent => "II-consistent",
            PhaseLabel::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub gamma: f64,
    pub beta: f64,
    /// Slope of the median of `ln |raw|` against `ln t`.
    pub slope: f64,
    pub stderr: f64,
    pub expected_slope: f64,
    pub label: PhaseLabel,
    pub n_t: usize,
}

/// `true` when `(gamma, beta)` lies in the glassy phase: `gamma > 1/2`, `beta > (1 - gamma)_+`.
pub fn in_phase_two(gamma: f64, beta: f64) -> bool {
    gamma > 0.5 && beta > (1.0 - gamma).max(0.0)
}

/// Classifies each cell by whether the median log-partition decays like
/// `t^(-3 gamma / 2)`, within `rel_tolerance` of that exponent.
pub fn phase_scan(cells: &[PhaseCellInput], rel_tolerance: f64) -> Result<Vec<PhaseCell>> {
    cells
        .iter()
        .map(|cell| {
            let pts: Vec<(f64, f64)> =
                cell.by_t.iter().filter(|(_, v)| !v.is_empty()).map(|(t, v)| (t.ln(), median(v))).collect();
            if pts.len() < 2 {
                return Err(Error::InsufficientSamples { needed: 2, got: pts.len() });
            }
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let fit = ols(&xs, &ys)?;
            let expected = -1.5 * cell.gamma;
            let label = if (fit.slope - expected).abs() <= rel_tolerance * expected.abs() {
                PhaseLabel::PhaseIIConsistent
            } else {
                PhaseLabel::Other
            };
            Ok(PhaseCell {
                gamma: cell.gamma,
                beta: cell.beta,
                slope: fit.slope,
                stderr: fit.stderr,
                expected_slope: expected,
                label,
                n_t: xs.len(),
            })
        })
        .collect()
}
