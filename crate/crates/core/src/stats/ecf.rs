//! Empirical characteristic functions and the stable-mixture fit.
//!
//! The limit law of the normalized partition function is isotropic with
//! characteristic function `E exp(-c M' |x|^p)`. The fit compares the
//! rotationally averaged empirical CF of the planar samples with the mixture
//! `(1/n) sum_j exp(-c d_j r^p)` built from the paired derivative-martingale
//! values `d_j`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::optimize::nelder_mead;
use crate::error::{Error, Result};
use crate::rng::node_rng;

/// Directions averaged per radius. They come in antipodal pairs, so the
/// average is real.
pub const ECF_DIRECTIONS: usize = 16;

const MIN_PAIRS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfFit {
    pub c_hat: f64,
    pub p_hat: f64,
    /// Sum of squared CF residuals at the optimum.
    pub residual: f64,
    pub grid: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub n_used: usize,
    /// Pairs dropped for a nonpositive or non-finite `d`.
    pub n_filtered: usize,
}

/// `(1/n) sum_j exp(i <x, z_j>)` with `z` read as a planar vector.
pub fn empirical_cf(samples: &[Complex64], points: &[[f64; 2]]) -> Result<Vec<Complex64>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("empirical CF of an empty sample".into()));
    }
    let n = samples.len() as f64;
    Ok(points
        .iter()
        .map(|x| {
            let (mut c, mut s) = (0.0, 0.0);
            for z in samples {
                let (sn, cs) = (x[0] * z.re + x[1] * z.im).sin_cos();
                c += cs;
                s += sn;
            }
            Complex64::new(c / n, s / n)
        })
        .collect())
}

/// Empirical CF averaged over [`ECF_DIRECTIONS`] equispaced directions at radius `r`.
pub fn rotational_ecf(samples: &[Complex64], r: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("empirical CF of an empty sample".into()));
    }
    // antipodal directions contribute conjugates, so half of them and the real part suffice
    let half = ECF_DIRECTIONS / 2;
    let mut total = 0.0;
    for k in 0..half {
        let th = 2.0 * PI * k as f64 / ECF_DIRECTIONS as f64;
        let (ux, uy) = (r * th.cos(), r * th.sin());
        total += samples.iter().map(|z| (ux * z.re + uy * z.im).cos()).sum::<f64>();
    }
    Ok(total / (half * samples.len()) as f64)
}

/// Squared distance between the averaged ECF values and the mixture model on `grid`.
pub fn mixture_residual(ecf: &[f64], grid: &[f64], d: &[f64], c: f64, p: f64) -> f64 {
    let n = d.len() as f64;
    ecf.iter()
        .zip(grid)
        .map(|(&phi, &r)| {
            let scale = c * r.powf(p);
            let model = d.iter().map(|dj| (-scale * dj).exp()).sum::<f64>() / n;
            (phi - model).powi(2)
        })
        .sum()
}

/// Fits `(c, p)` with `p` restricted to `p_interval`.
///
/// Deterministic: a scan over 25 values of `p` with a golden-section search
/// over `ln c` at each, followed by a Nelder-Mead polish from the best point.
pub fn fit_stable_mixture(pairs: &[(Complex64, f64)], radial_grid: &[f64], p_interval: (f64, f64)) -> Result<CfFit> {
    let (p_lo, p_hi) = p_interval;
    if !(p_lo > 0.0 && p_hi > p_lo) {
        return Err(Error::Domain(format!("bad exponent interval ({p_lo}, {p_hi})")));
    }
    if radial_grid.len() < 2 || radial_grid.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Domain("radial grid needs at least two positive radii".into()));
    }
    let kept: Vec<(Complex64, f64)> = pairs
        .iter()
        .copied()
        .filter(|(z, d)| *d > 0.0 && d.is_finite() && z.re.is_finite() && z.im.is_finite())
        .collect();
    let n_filtered = pairs.len() - kept.len();
    if kept.len() < MIN_PAIRS {
        return Err(Error::InsufficientSamples { needed: MIN_PAIRS, got: kept.len() });
    }
    let z: Vec<Complex64> = kept.iter().map(|p| p.0).collect();
    let d: Vec<f64> = kept.iter().map(|p| p.1).collect();
    let ecf = radial_grid.iter().map(|&r| rotational_ecf(&z, r)).collect::<Result<Vec<_>>>()?;

    let objective = |ln_c: f64, p: f64| mixture_residual(&ecf, radial_grid, &d, ln_c.exp(), p);

    // ln c bracket centred where the model is ~1/2 at the geometric middle radius
    let mut sorted_d = d.clone();
    sorted_d.sort_by(f64::total_cmp);
    let d_med = sorted_d[sorted_d.len() / 2];
    let r_mid = (radial_grid.iter().map(|r| r.ln()).sum::<f64>() / radial_grid.len() as f64).exp();

    let golden = |p: f64| {
        let centre = (2f64.ln() / (d_med * r_mid.powf(p))).ln();
        let (mut a, mut b) = (centre - 12.0, centre + 12.0);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let (mut f1, mut f2) = (objective(x1, p), objective(x2, p));
        for _ in 0..60 {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = objective(x1, p);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = objective(x2, p);
            }
        }
        if f1 <= f2 {
            (x1, f1)
        } else {
            (x2, f2)
        }
    };

    const SCAN: usize = 25;
    let mut best = (f64::NAN, f64::NAN, f64::INFINITY);
    for i in 0..SCAN {
        let p = p_lo + (p_hi - p_lo) * i as f64 / (SCAN - 1) as f64;
        let (ln_c, v) = golden(p);
        if v < best.2 {
            best = (ln_c, p, v);
        }
    }

    let penalized = |x: [f64; 2]| {
        let p = x[1].clamp(p_lo, p_hi);
        objective(x[0], p) + 1e3 * (x[1] - p).powi(2)
    };
    let step_p = 0.5 * (p_hi - p_lo) / (SCAN - 1) as f64;
    let nm = nelder_mead(penalized, [best.0, best.1], [0.05, step_p], 1e-12, 400);
    let (ln_c, p, value) = if nm.value < best.2 {
        (nm.x[0], nm.x[1].clamp(p_lo, p_hi), objective(nm.x[0], nm.x[1].clamp(p_lo, p_hi)))
    } else {
        best
    };

    Ok(CfFit {
        c_hat: ln_c.exp(),
        p_hat: p,
        residual: value,
        grid: radial_grid.to_vec(),
        converged: nm.converged,
        iterations: nm.iterations,
        n_used: kept.len(),
        n_filtered,
    })
}

/// Positive stable law with `E exp(-l A) = exp(-l^alpha)` (Kanter's representation).
pub fn positive_stable(alpha: f64, rng: &mut impl Rng) -> f64 {
    let u = PI * rng.random::<f64>();
    let e: f64 = Exp1.sample(rng);
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * u).sin() / e).powf((1.0 - alpha) / alpha);
    a * b
}

/// Pairs drawn exactly from the mixture model with `d = 0.2 + Exp(1)`: given
/// `d`, `z` is isotropic with CF `exp(-c d |x|^p)`, realized as
/// `(c d)^(1/p) sqrt(2 A) G` with `A` positive `p/2`-stable.
pub fn synthetic_mixture(c: f64, p: f64, n: usize, seed: u64) -> Result<Vec<(Complex64, f64)>> {
    if !(c > 0.0 && p > 0.0 && p < 2.0) {
        return Err(Error::Domain(format!("synthetic mixture needs c > 0 and 0 < p < 2, got c = {c}, p = {p}")));
    }
    let mut rng = node_rng(seed);
    Ok((0..n)
        .map(|_| {
            let e: f64 = Exp1.sample(&mut rng);
            let d = 0.2 + e;
            let a = positive_stable(p / 2.0, &mut rng);
            let g = Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            (g * ((c * d).powf(1.0 / p) * (2.0 * a).sqrt()), d)
        })
        .collect())
}
