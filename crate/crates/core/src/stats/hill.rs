use crate::error::{Error, Result};

/// `floor(n^(2/3))`, the default number of upper order statistics.
pub fn default_hill_k(n: usize) -> usize {
    let k = (n as f64).powf(2.0 / 3.0).floor() as usize;
    // guard against cube roots that land a hair below an integer
    if (k + 1).pow(3) <= n * n {
        k + 1
    } else {
        k
    }
}

/// Hill estimate of `a` in `P(V > v) ~ v^(-a)` from the `k` largest values:
/// `k / sum_{i<=k} ln(v_(n-i+1) / v_(n-k))`.
pub fn hill_estimator(values: &[f64], k: usize) -> Result<f64> {
    let n = values.len();
    if k < 2 || k >= n {
        return Err(Error::Domain(format!("Hill order k = {k} outside [2, {n})")));
    }
    if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!("Hill estimator needs positive finite values, got {bad}")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let threshold = v[n - k - 1];
    let s: f64 = v[n - k..].iter().map(|x| (x / threshold).ln()).sum();
    if s <= 0.0 {
        return Err(Error::Degenerate("upper order statistics are all tied".into()));
    }
    Ok(k as f64 / s)
}
