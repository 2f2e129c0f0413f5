//! Closed-form expectations used as exact validation targets.
//!
//! First moments come from the many-to-one identity
//! `E sum F(X_i) = e^t E F(sqrt(2) B_t + 2t)`. The pair moment uses its
//! many-to-two extension: pairs of distinct particles whose lineages split at
//! time `s` appear at rate `2 e^s ds`, share the path up to `s` and then move
//! independently, which gives
//!
//! ```text
//! E sum_{i,j} e^{-gamma(X_i+X_j) - 2 beta^2 (t - tau_ij)}
//!   = e^{(2 gamma - 1)^2 t}
//!   + 2 e^{2((1-gamma)^2 - beta^2) t} int_0^t e^{(2 gamma^2 + 2 beta^2 - 1) s} ds.
//! ```
//!
//! The diagonal term is `E sum e^{-2 gamma X_i}`; in the cross term the common
//! segment contributes `e^{s} E e^{-2 gamma X(s)} = e^{(2 gamma - 1)^2 s}` per unit
//! rate and each branch `e^{((1-gamma)^2 - beta^2)(t - s)}`, the `beta` factor
//! being the characteristic function of `Ybar_i - Ybar_j ~ N(0, 2(t - s))` at
//! `sqrt(2) beta`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub name: String,
    pub t: f64,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub value: f64,
    pub derivation: String,
}

/// `E N(t) = e^t`.
pub fn expected_count(t: f64) -> f64 {
    t.exp()
}

/// Means of `sum e^{-X_i}` and `sum X_i e^{-X_i}`: `(1, 0)` at every `t`.
pub fn expected_critical(_t: f64) -> (f64, f64) {
    (1.0, 0.0)
}

/// `E sum e^{-gamma X_i(t)} = e^{(1-gamma)^2 t}`.
pub fn expected_additive(t: f64, gamma: f64) -> f64 {
    ((1.0 - gamma) * (1.0 - gamma) * t).exp()
}

/// Expected pair sum, equal to `E |raw partition|^2` and to the mean overlap.
pub fn expected_second_moment(t: f64, gamma: f64, beta: f64) -> f64 {
    let diag = ((2.0 * gamma - 1.0).powi(2) * t).exp();
    let rate = 2.0 * gamma * gamma + 2.0 * beta * beta - 1.0;
    let pref = 2.0 * (2.0 * ((1.0 - gamma).powi(2) - beta * beta) * t).exp();
    // int_0^t e^{rate s} ds, continuous through rate = 0
    let integral = if (rate * t).abs() < 1e-8 { t * (1.0 + 0.5 * rate * t) } else { (rate * t).exp_m1() / rate };
    diag + pref * integral
}

/// Decay rate `2 (beta^2 - (1-gamma)^2)` of the off-diagonal pair weight.
pub fn decay_rate(gamma: f64, beta: f64) -> f64 {
    2.0 * (beta * beta - (1.0 - gamma).powi(2))
}

/// Every oracle evaluated on the given grids, in a fixed order.
pub fn oracle_table(t: f64, gammas: &[f64], betas: &[f64]) -> Vec<OracleValue> {
    let mut out = vec![
        OracleValue {
            name: "count".into(),
            t,
            gamma: None,
            beta: None,
            value: expected_count(t),
            derivation: "many-to-one, F = 1".into(),
        },
        OracleValue {
            name: "critical_additive".into(),
            t,
            gamma: Some(1.0),
            beta: None,
            value: expected_critical(t).0,
            derivation: "critical normalization".into(),
        },
        OracleValue {
            name: "derivative".into(),
            t,
            gamma: Some(1.0),
            beta: None,
            value: expected_critical(t).1,
            derivation: "critical normalization".into(),
        },
    ];
    for &g in gammas {
        out.push(OracleValue {
            name: "additive".into(),
            t,
            gamma: Some(g),
            beta: None,
            value: expected_additive(t, g),
            derivation: "many-to-one, Gaussian moment".into(),
        });
    }
    for &g in gammas {
        for &b in betas {
            out.push(OracleValue {
                name: "second_moment".into(),
                t,
                gamma: Some(g),
                beta: Some(b),
                value: expected_second_moment(t, g, b),
                derivation: "many-to-two".into(),
            });
        }
    }
    out
}
