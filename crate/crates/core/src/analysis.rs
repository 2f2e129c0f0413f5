//! Store-level analyses shared by the command line and the acceptance suite.
//! Each returns [`Check`] rows: a point estimate, the admissible band and a
//! verdict, with thresholds taken from [`Gates`].

use std::f64::consts::E;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::Gates;
use crate::harness::{aggregate, Metric, PartitionPart, ReplicaRecord, Store, Summary};
use crate::oracles::{expected_additive, expected_count, expected_critical, expected_second_moment};
use crate::stats::{
    fit_stable_mixture, hill_estimator, ks_uniform_angle, kuiper_uniform_angle, median, phase_scan,
    rotation_invariance_test, slope_regression, synthetic_mixture, CfFit, PhaseCell, PhaseCellInput,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub lo: f64,
    pub hi: f64,
    pub pass: bool,
    pub note: String,
}

impl Check {
    pub fn band(name: impl Into<String>, value: f64, target: f64, lo: f64, hi: f64) -> Check {
        Check { name: name.into(), value, target, lo, hi, pass: value >= lo && value <= hi, note: String::new() }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Check {
        self.note = note.into();
        self
    }

    /// `|mean - target| <= k SE`.
    pub fn se_gate(name: impl Into<String>, s: &Summary, target: f64, k: f64) -> Check {
        let se = s.se.unwrap_or(f64::NAN);
        let note = format!("n={} se={:.6e} z={:.3}", s.count, se, (s.mean - target) / se);
        let mut c = Check::band(name, s.mean, target, target - k * se, target + k * se);
        c.pass = s.within_se(target, k);
        c.with_note(note)
    }

    pub const CSV_HEADER: &'static str = "name,value,target,lo,hi,pass,note";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},\"{}\"",
            self.name,
            self.value,
            self.target,
            self.lo,
            self.hi,
            if self.pass { "PASS" } else { "FAIL" },
            self.note.replace('"', "'")
        )
    }
}

/// Records at `t` by replica index, so results do not depend on the order in
/// which a parallel run wrote them.
fn records_at(store: &Store, t: f64) -> Vec<&ReplicaRecord> {
    let mut v: Vec<&ReplicaRecord> = store.replicas().filter(|r| r.t == t).collect();
    v.sort_by_key(|r| r.replica_index);
    v
}

fn nonempty(store: &Store) -> Result<()> {
    if store.replicas().next().is_none() {
        return Err(Error::EmptyInput("store has no replica records".into()));
    }
    Ok(())
}

/// 4-SE gates of every store mean against its closed-form expectation. The
/// leaf count is not gated on pruned stores, whose counts are incomplete.
pub fn oracle_checks(store: &Store, gates: &Gates) -> Result<Vec<Check>> {
    nonempty(store)?;
    let k = gates.se_multiplier;
    let mut out = Vec::new();
    for t in store.t_values() {
        let recs = records_at(store, t);
        let first = recs[0];
        let pruned = recs.iter().any(|r| r.is_pruned());
        if !pruned {
            let s = aggregate(recs.iter().copied(), &Metric::NLeaves)?;
            out.push(Check::se_gate(format!("t={t} N(t)"), &s, expected_count(t), k));
        }
        let (w, d) = expected_critical(t);
        let s = aggregate(recs.iter().copied(), &Metric::Additive(1.0))?;
        out.push(Check::se_gate(format!("t={t} sum e^-X"), &s, w, k));
        let s = aggregate(recs.iter().copied(), &Metric::Derivative)?;
        out.push(Check::se_gate(format!("t={t} sum X e^-X"), &s, d, k));
        for a in &first.additive {
            if a.gamma == 1.0 {
                continue;
            }
            let s = aggregate(recs.iter().copied(), &Metric::Additive(a.gamma))?;
            out.push(Check::se_gate(format!("t={t} sum e^-{}X", a.gamma), &s, expected_additive(t, a.gamma), k));
        }
        for o in &first.overlap {
            let m = Metric::Overlap { gamma: o.gamma, beta: o.beta };
            let s = aggregate(recs.iter().copied(), &m)?;
            out.push(Check::se_gate(
                format!("t={t} overlap(gamma={},beta={})", o.gamma, o.beta),
                &s,
                expected_second_moment(t, o.gamma, o.beta),
                k,
            ));
        }
        for p in first.partitions.iter().filter(|p| p.trunc.is_none()) {
            let m = Metric::Partition { gamma: p.gamma, beta: p.beta, trunc: None, part: PartitionPart::AbsSq };
            let s = aggregate(recs.iter().copied(), &m)?;
            out.push(Check::se_gate(
                format!("t={t} |Z|^2(gamma={},beta={})", p.gamma, p.beta),
                &s,
                expected_second_moment(t, p.gamma, p.beta),
                k,
            ));
        }
    }
    Ok(out)
}

fn single_t(store: &Store) -> Result<f64> {
    let ts = store.t_values();
    match ts.as_slice() {
        [] => Err(Error::EmptyInput("store has no replica records".into())),
        [.., last] => Ok(*last),
    }
}

/// Normalized partitions paired with the derivative martingale of the same
/// replica, at the largest `t` of the store.
pub fn partition_pairs(store: &Store, gamma: f64, beta: f64) -> Result<Vec<(Complex64, f64)>> {
    let t = single_t(store)?;
    records_at(store, t)
        .into_iter()
        .map(|r| {
            r.normalized_partition(gamma, beta, None)
                .map(|z| (z, r.derivative))
                .ok_or_else(|| Error::MissingData(format!("no partition at gamma={gamma}, beta={beta}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfFitReport {
    pub fit: CfFit,
    pub check: Check,
    /// Rotationally averaged ECF at each grid radius.
    pub ecf: Vec<f64>,
}

/// Stable-mixture CF fit of `(Z, D)` pairs; passes when `|p_hat - 1/gamma| <= tol`.
pub fn cf_fit_analysis(pairs: &[(Complex64, f64)], gamma: f64, gates: &Gates) -> Result<CfFitReport> {
    let moduli: Vec<f64> = pairs.iter().map(|p| p.0.norm()).filter(|m| *m > 0.0).collect();
    if moduli.is_empty() {
        return Err(Error::Degenerate("all partitions vanish".into()));
    }
    let grid = gates.cf_grid(1.0 / median(&moduli));
    let fit = fit_stable_mixture(pairs, &grid, gates.cf_p_interval)?;
    let z: Vec<Complex64> = pairs.iter().map(|p| p.0).collect();
    let ecf = grid.iter().map(|&r| crate::stats::rotational_ecf(&z, r)).collect::<Result<Vec<_>>>()?;
    let target = 1.0 / gamma;
    let tol = gates.cf_p_abs_tol;
    let check = Check::band(format!("cf-fit p_hat (gamma={gamma})"), fit.p_hat, target, target - tol, target + tol)
        .with_note(format!(
            "c_hat={:.6} residual={:.3e} converged={} n_used={} n_filtered={}",
            fit.c_hat, fit.residual, fit.converged, fit.n_used, fit.n_filtered
        ));
    Ok(CfFitReport { fit, check, ecf })
}

/// Parameters of the synthetic recovery check run before fitting real data.
pub const SYNTHETIC_CF: (f64, f64, usize) = (0.5, 1.25, 10_000);

/// Fits pairs drawn exactly from the mixture model with known `(c, p)`
/// through the same grid construction as [`cf_fit_analysis`]. Both estimates
/// must land within the relative tolerance.
pub fn cf_synthetic_pregate(gates: &Gates, seed: u64) -> Result<Vec<Check>> {
    let (c, p, n) = SYNTHETIC_CF;
    let pairs = synthetic_mixture(c, p, n, seed)?;
    let moduli: Vec<f64> = pairs.iter().map(|q| q.0.norm()).collect();
    let grid = gates.cf_grid(1.0 / median(&moduli));
    let fit = fit_stable_mixture(&pairs, &grid, gates.cf_p_interval)?;
    let tol = gates.cf_synthetic_rel_tol;
    let note = format!("n={n} seed={seed} residual={:.3e}", fit.residual);
    Ok(vec![
        Check::band("synthetic c_hat", fit.c_hat, c, c * (1.0 - tol), c * (1.0 + tol)).with_note(note.clone()),
        Check::band("synthetic p_hat", fit.p_hat, p, p * (1.0 - tol), p * (1.0 + tol)).with_note(note),
    ])
}

/// Hill tail index of `values` against `1/gamma`, from the `k` largest
/// values (default `floor(n^(2/3))`).
pub fn tail_check(name: &str, values: &[f64], gamma: f64, k: Option<usize>, gates: &Gates) -> Result<Check> {
    let v: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    if v.len() < gates.tails_min_samples {
        return Err(Error::InsufficientSamples { needed: gates.tails_min_samples, got: v.len() });
    }
    let k = k.unwrap_or_else(|| gates.hill_k(v.len()));
    let a = hill_estimator(&v, k)?;
    let target = 1.0 / gamma;
    let tol = gates.hill_rel_tol * target;
    Ok(Check::band(name, a, target, target - tol, target + tol).with_note(format!(
        "n={} k={k} dropped_nonpositive={}",
        v.len(),
        values.len() - v.len()
    )))
}

/// Uniform-angle KS, Kuiper, and the rotation test of normalized partitions.
pub fn isotropy_checks(z: &[Complex64], gates: &Gates) -> Result<Vec<Check>> {
    let p_min = gates.ks_min_p;
    let ks = ks_uniform_angle(z)?;
    let kuiper = kuiper_uniform_angle(z)?;
    let rot = rotation_invariance_test(z, gates.rotation_theta)?;
    Ok(vec![
        Check::band("ks uniform angle p", ks.p_value, 1.0, p_min, 1.0)
            .with_note(format!("D={:.5} n={}", ks.statistic, ks.n)),
        Check::band("kuiper uniform angle p", kuiper.p_value, 1.0, p_min, 1.0)
            .with_note(format!("V={:.5} n={}", kuiper.statistic, kuiper.n)),
        Check::band("rotation test p", rot.p_value, 1.0, p_min, 1.0)
            .with_note(format!("D={:.5} theta={:.6}", rot.statistic, gates.rotation_theta)),
    ])
}

/// One-sided gates `P(global inf <= -k) <= e^-k + m SE` for `k = 1..=5`.
pub fn infimum_checks(store: &Store, gates: &Gates) -> Result<Vec<Check>> {
    nonempty(store)?;
    let recs: Vec<&ReplicaRecord> = store.replicas().collect();
    (1..=5)
        .map(|k| {
            let level = -(k as f64);
            let s = aggregate(recs.iter().copied(), &Metric::InfimumBelow(level))?;
            let se = s.se.unwrap_or(0.0);
            let bound = (-(k as f64)).exp() + gates.infimum_se_multiplier * se;
            Ok(Check::band(format!("P(inf <= -{k})"), s.mean, E.powi(-(k as i32)), 0.0, bound)
                .with_note(format!("n={} se={se:.3e}", s.count)))
        })
        .collect()
}

/// Binned anchor levels: `(bin centre, count)` for anchors in `window`.
pub fn anchor_histogram(store: &Store, window: (f64, f64), bins: usize) -> Result<(Vec<(f64, usize)>, usize)> {
    nonempty(store)?;
    let (lo, hi) = window;
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut n = 0;
    for r in store.replicas() {
        n += 1;
        if r.clusters.len() < r.clusters_total && r.clusters.last().is_some_and(|c| c.anchor_level <= hi) {
            return Err(Error::MissingData(format!(
                "replica {} caps its clusters inside the window; raise the cluster cap",
                r.replica_index
            )));
        }
        for c in &r.clusters {
            let x = c.anchor_level;
            if x >= lo && x < hi {
                counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
            }
        }
    }
    let centres = (0..bins).map(|i| lo + (i as f64 + 0.5) * width);
    Ok((centres.zip(counts).collect(), n))
}

/// Slope of `ln(anchor count per unit level)` against level.
pub fn ppp_slope_check(store: &Store, gates: &Gates) -> Result<Check> {
    let (hist, n) = anchor_histogram(store, gates.ppp_window, gates.ppp_bins)?;
    let pts: Vec<(f64, f64)> = hist.iter().filter(|(_, c)| *c > 0).map(|&(x, c)| (x, (c as f64).ln())).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let fit = slope_regression(&xs, &ys)?;
    let tol = gates.slope_abs_tol;
    Ok(Check::band("anchor intensity slope", fit.slope, 1.0, 1.0 - tol, 1.0 + tol).with_note(format!(
        "replicas={n} anchors={} stderr={:.4}",
        hist.iter().map(|h| h.1).sum::<usize>(),
        fit.stderr
    )))
}

/// Recentered minima per `t`. Replicas lost entirely to pruning have their
/// minimum above the tracked level and enter as `+inf`.
pub fn minima_by_t(store: &Store) -> Vec<(f64, Vec<f64>)> {
    let mut ts = store.t_values();
    for f in store.failures().filter(|f| f.all_pruned) {
        ts.push(f.t);
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts.into_iter()
        .map(|t| {
            let mut v: Vec<f64> = store.replicas().filter(|r| r.t == t).map(|r| r.recentered_min).collect();
            v.extend(store.failures().filter(|f| f.all_pruned && f.t == t).map(|_| f64::INFINITY));
            (t, v)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BramsonReport {
    /// `(t, n, median)`.
    pub medians: Vec<(f64, usize, f64)>,
    /// `(x, P(W <= x))` over the pooled sample.
    pub tail: Vec<(f64, f64)>,
    pub checks: Vec<Check>,
}

/// Stability of the median recentered minimum across `t`, and the left-tail
/// slope of `ln P(W <= x) - ln|x|` over the pooled minima.
pub fn bramson_analysis(store: &Store, gates: &Gates) -> Result<BramsonReport> {
    let by_t = minima_by_t(store);
    if by_t.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: by_t.len() });
    }
    let medians: Vec<(f64, usize, f64)> = by_t.iter().map(|(t, v)| (*t, v.len(), median(v))).collect();
    let hi = medians.iter().map(|m| m.2).fold(f64::NEG_INFINITY, f64::max);
    let lo = medians.iter().map(|m| m.2).fold(f64::INFINITY, f64::min);
    let drift = hi - lo;
    let mut checks = vec![Check::band("median recentered min drift", drift, 0.0, 0.0, gates.bramson_max_drift)
        .with_note(medians.iter().map(|(t, n, m)| format!("t={t}:n={n}:median={m:.4}")).collect::<Vec<_>>().join(" "))];

    let mut pooled: Vec<f64> = by_t.into_iter().flat_map(|(_, v)| v).collect();
    pooled.sort_by(f64::total_cmp);
    let n = pooled.len() as f64;
    let (a, b) = gates.bramson_tail_window;
    let m = gates.bramson_tail_bins.max(3);
    let tail: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let x = a + (b - a) * i as f64 / (m - 1) as f64;
            (x, pooled.partition_point(|w| *w <= x) as f64 / n)
        })
        .collect();
    let pts: Vec<(f64, f64)> =
        tail.iter().filter(|(_, p)| *p > 0.0).map(|&(x, p)| (x, p.ln() - x.abs().ln())).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    let tol = gates.slope_abs_tol;
    match slope_regression(&xs, &ys) {
        Ok(fit) => {
            checks.push(Check::band("left-tail slope", fit.slope, 1.0, 1.0 - tol, 1.0 + tol).with_note(format!(
                "points={} pooled_n={} stderr={:.4}",
                xs.len(),
                pooled.len(),
                fit.stderr
            )))
        }
        Err(e) => {
            checks.push(Check::band("left-tail slope", f64::NAN, 1.0, 1.0 - tol, 1.0 + tol).with_note(e.to_string()))
        }
    }
    Ok(BramsonReport { medians, tail, checks })
}

/// Median `ln |raw|` per `t` for one `(gamma, beta)`.
pub fn phase_input(store: &Store, gamma: f64, beta: f64) -> Result<PhaseCellInput> {
    let by_t = store
        .t_values()
        .into_iter()
        .map(|t| {
            let v: Vec<f64> = records_at(store, t)
                .into_iter()
                .filter_map(|r| r.partition(gamma, beta, None))
                .map(|z| z.norm().ln())
                .filter(|v| v.is_finite())
                .collect();
            (t, v)
        })
        .collect();
    Ok(PhaseCellInput { gamma, beta, by_t })
}

/// Normalization exponent: slope of median `ln |raw|` on `ln t` against `-3 gamma / 2`.
pub fn normalization_check(store: &Store, gamma: f64, beta: f64, gates: &Gates) -> Result<(PhaseCell, Check)> {
    let input = phase_input(store, gamma, beta)?;
    let cell = phase_scan(&[input], gates.phase_rel_tol)?.remove(0);
    let target = cell.expected_slope;
    let tol = gates.phase_rel_tol * target.abs();
    let check = Check::band(
        format!("normalization slope (gamma={gamma},beta={beta})"),
        cell.slope,
        target,
        target - tol,
        target + tol,
    )
    .with_note(format!("t points={} stderr={:.4}", cell.n_t, cell.stderr));
    Ok((cell, check))
}

/// Absolute normalized partitions at the largest `t`.
pub fn normalized_moduli(store: &Store, gamma: f64, beta: f64) -> Result<Vec<f64>> {
    Ok(partition_pairs(store, gamma, beta)?.into_iter().map(|(z, _)| z.norm()).collect())
}
