use num_complex::Complex64;
use std::f64::consts::PI;

use super::TestResult;
use crate::error::{Error, Result};

/// Asymptotic Kolmogorov tail `P(K > lambda)` with Stephens' small-sample
/// correction folded into `lambda` by the callers.
pub fn kolmogorov_pvalue(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // Jacobi-transformed series converges fast for small lambda
        let y = -PI * PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=6).map(|k| (y * ((2 * k - 1) as f64).powi(2)).exp()).sum();
        1.0 - (2.0 * PI).sqrt() / lambda * s
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        2.0 * s
    };
    p.clamp(0.0, 1.0)
}

fn stephens(n_eff: f64, d: f64) -> f64 {
    let sn = n_eff.sqrt();
    (sn + 0.12 + 0.11 / sn) * d
}

/// `(D+, D-)` of sorted values in `[0, 1)` against the uniform law.
fn one_sample_deviations(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .fold((0.0f64, 0.0f64), |(dp, dm), (i, &u)| ((dp).max((i + 1) as f64 / n - u), dm.max(u - i as f64 / n)))
}

/// One-sample KS test of values in `[0, 1)` against the uniform law.
pub fn ks_uniform(values: &[f64]) -> Result<TestResult> {
    if values.is_empty() {
        return Err(Error::EmptyInput("no samples for KS test".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (dp, dm) = one_sample_deviations(&v);
    let d = dp.max(dm);
    Ok(TestResult { statistic: d, p_value: kolmogorov_pvalue(stephens(v.len() as f64, d)), n: v.len() })
}

/// `arg(z) / 2 pi` mapped to `[0, 1)`; zeros dropped.
fn unit_angles(samples: &[Complex64]) -> Result<Vec<f64>> {
    let u: Vec<f64> = samples
        .iter()
        .filter(|z| z.re != 0.0 || z.im != 0.0)
        .map(|z| {
            let a = (z.arg() / (2.0 * PI)).rem_euclid(1.0);
            // rem_euclid can round up to exactly 1
            if a >= 1.0 {
                0.0
            } else {
                a
            }
        })
        .collect();
    if u.is_empty() {
        return Err(Error::EmptyInput("all samples are zero".into()));
    }
    Ok(u)
}

/// KS test of `arg(z) / 2 pi mod 1` against the uniform law. Zero samples
/// are dropped; `n` reports how many were used.
pub fn ks_uniform_angle(samples: &[Complex64]) -> Result<TestResult> {
    ks_uniform(&unit_angles(samples)?)
}

/// Kuiper's `V = D+ + D-` for the angles, the rotation-invariant companion of
/// [`ks_uniform_angle`]. The p-value uses the asymptotic Kuiper tail.
pub fn kuiper_uniform_angle(samples: &[Complex64]) -> Result<TestResult> {
    let mut u = unit_angles(samples)?;
    u.sort_by(f64::total_cmp);
    let (dp, dm) = one_sample_deviations(&u);
    let v = dp + dm;
    let sn = (u.len() as f64).sqrt();
    let lambda = (sn + 0.155 + 0.24 / sn) * v;
    let mut p = 0.0;
    if lambda < 0.4 {
        p = 1.0;
    } else {
        for j in 1..=100 {
            let jl2 = (j * j) as f64 * lambda * lambda;
            let term = 2.0 * (4.0 * jl2 - 1.0) * (-2.0 * jl2).exp();
            p += term;
            if term.abs() < 1e-17 {
                break;
            }
        }
    }
    Ok(TestResult { statistic: v, p_value: p.clamp(0.0, 1.0), n: u.len() })
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("two-sample KS needs both samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    Ok(TestResult { statistic: d, p_value: kolmogorov_pvalue(stephens(n_eff, d)), n: a.len() + b.len() })
}

/// Splits the sample by index parity, rotates the odd half by `e^{i theta}`
/// and compares real parts of the halves with a two-sample KS test.
pub fn rotation_invariance_test(samples: &[Complex64], theta: f64) -> Result<TestResult> {
    const MIN: usize = 200;
    if samples.len() < MIN {
        return Err(Error::InsufficientSamples { needed: MIN, got: samples.len() });
    }
    let rot = Complex64::from_polar(1.0, theta);
    let even: Vec<f64> = samples.iter().step_by(2).map(|z| z.re).collect();
    let odd: Vec<f64> = samples.iter().skip(1).step_by(2).map(|z| (z * rot).re).collect();
    ks_two_sample(&even, &odd)
}
