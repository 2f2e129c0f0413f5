//! Functionals of a single replica.
//!
//! Sums run over leaves in ascending `x` with Neumaier compensation and the
//! factor `exp(-gamma x_min)` pulled out: at moderate `t` the front and the
//! bulk differ by many orders of magnitude.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::sim::{bramson_shift, NodeId, NodeKind, ReplicaOutput};

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::default();
        for v in iter {
            s.add(v);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionValue {
    pub gamma: f64,
    pub beta: f64,
    /// `sum exp(-gamma X_i + i sqrt(2) beta Ybar_i)` over the retained leaves.
    pub raw: Complex64,
    /// `t^(3 gamma / 2) * raw`.
    pub normalized: Complex64,
    /// Leaves with `X_i > (3/2) ln t + k` are excluded when set.
    pub trunc_level: Option<f64>,
}

/// `t^(3 gamma / 2)`.
#[inline]
pub fn normalization(t: f64, gamma: f64) -> f64 {
    t.powf(1.5 * gamma)
}

/// Phase-weighted sum over the leaves whose sorted rank lies in `ranks`.
fn phase_sum(r: &ReplicaOutput, gamma: f64, beta: f64, ranks: std::ops::Range<usize>) -> Complex64 {
    if ranks.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let sorted = r.sorted();
    let (xs, ys) = (&sorted.x[ranks.clone()], &sorted.y[ranks]);
    let x0 = xs[0];
    let omega = SQRT_2 * beta;
    let mut re = KahanSum::default();
    let mut im = KahanSum::default();
    if omega == 0.0 {
        for &x in xs {
            re.add((-gamma * (x - x0)).exp());
        }
        return Complex64::new(re.value(), 0.0) * (-gamma * x0).exp();
    }
    for (&x, &y) in xs.iter().zip(ys) {
        let w = (-gamma * (x - x0)).exp();
        let (s, c) = (omega * y).sin_cos();
        re.add(w * c);
        im.add(w * s);
    }
    Complex64::new(re.value(), im.value()) * (-gamma * x0).exp()
}

/// Number of leading sorted ranks with `x <= level`.
fn count_at_or_below(r: &ReplicaOutput, level: f64) -> usize {
    r.sorted().x.partition_point(|&x| x <= level)
}

/// Number of leading sorted ranks with `x < level`.
fn count_below(r: &ReplicaOutput, level: f64) -> usize {
    r.sorted().x.partition_point(|&x| x < level)
}

pub fn complex_partition(r: &ReplicaOutput, gamma: f64, beta: f64, trunc_k: Option<f64>) -> PartitionValue {
    let end = match trunc_k {
        Some(k) => count_at_or_below(r, bramson_shift(r.t_final) + k),
        None => r.n_leaves(),
    };
    let raw = phase_sum(r, gamma, beta, 0..end);
    PartitionValue { gamma, beta, raw, normalized: raw * normalization(r.t_final, gamma), trunc_level: trunc_k }
}

/// Normalized sum over leaves with `X_i - (3/2) ln t >= k`: the part removed by truncation at `k`.
pub fn tail_remainder(r: &ReplicaOutput, gamma: f64, beta: f64, k: f64) -> Complex64 {
    let start = count_below(r, bramson_shift(r.t_final) + k);
    phase_sum(r, gamma, beta, start..r.n_leaves()) * normalization(r.t_final, gamma)
}

/// `sum X_i exp(-X_i)`.
pub fn derivative_martingale(r: &ReplicaOutput) -> f64 {
    r.sorted().x.iter().map(|&x| x * (-x).exp()).collect::<KahanSum>().value()
}

/// `sum exp(-gamma X_i)`.
pub fn additive_martingale(r: &ReplicaOutput, gamma: f64) -> f64 {
    phase_sum(r, gamma, 0.0, 0..r.n_leaves()).re
}

/// `min_i X_i - (3/2) ln t`.
pub fn recentered_minimum(r: &ReplicaOutput) -> f64 {
    r.min_x() - bramson_shift(r.t_final)
}

/// `sum_{i,j} exp(-gamma (X_i + X_j) - 2 beta^2 (t - tau_ij))` with `tau_ii = t`.
///
/// Post-order recursion: each subtree carries `A = sum exp(-gamma X)` and its
/// own pair sum `P`; a split at time `s` adds `2 exp(-2 beta^2 (t - s)) A_l A_r`.
pub fn pairwise_overlap(r: &ReplicaOutput, gamma: f64, beta: f64) -> f64 {
    let t = r.t_final;
    let x0 = r.min_x();
    let nodes = r.genealogy.nodes();
    let mut a = vec![0.0f64; nodes.len()];
    let mut p = vec![0.0f64; nodes.len()];
    let decay = 2.0 * beta * beta;
    for (id, node) in nodes.iter().enumerate().rev() {
        match node.kind {
            NodeKind::Leaf(i) => {
                let w = (-gamma * (r.leaves()[i as usize].x - x0)).exp();
                a[id] = w;
                p[id] = w * w;
            }
            NodeKind::Pruned { .. } => {}
            NodeKind::Internal { split_time, children: [l, rr] } => {
                let (l, rr) = (l as usize, rr as usize);
                a[id] = a[l] + a[rr];
                p[id] = p[l] + p[rr] + 2.0 * (-decay * (t - split_time)).exp() * a[l] * a[rr];
            }
        }
    }
    p[0] * (-2.0 * gamma * x0).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMember {
    /// `X_j - X_anchor`, nonnegative.
    pub dx: f64,
    /// `Ybar_j - Ybar_anchor`.
    pub dy: f64,
    /// `t - tau_{j, anchor}`.
    pub split_age: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    /// Anchor position minus `(3/2) ln t`.
    pub anchor_level: f64,
    pub anchor_leaf: usize,
    /// Other members of the cluster, sorted by `dx`.
    pub members: Vec<ClusterMember>,
    pub window_k: f64,
    pub genealogical_depth_b: f64,
}

/// Groups the leaves with `X <= (3/2) ln t + window_k` into clusters of
/// relatives that split less than `depth_b` before `t`.
///
/// `t - tau_ij < b` is an equivalence relation on leaves (the genealogy is
/// ultrametric), so a cluster is the set of windowed leaves descending from
/// one particle alive at time `t - b`. The anchor is the cluster minimum.
pub fn extract_clusters(r: &ReplicaOutput, window_k: f64, depth_b: f64) -> Result<Vec<ClusterSummary>> {
    if !(window_k > 0.0) || !(depth_b > 0.0) {
        return Err(Error::Domain(format!(
            "cluster window and depth must be positive, got k = {window_k}, b = {depth_b}"
        )));
    }
    let t = r.t_final;
    let cutoff = t - depth_b;
    let g = &r.genealogy;
    let group_root = |mut n: NodeId| {
        while let Some(p) = g.node(n).parent {
            match g.node(p).split_time() {
                Some(s) if s > cutoff => n = p,
                _ => break,
            }
        }
        n
    };

    let shift = bramson_shift(t);
    let windowed = count_at_or_below(r, shift + window_k);
    // sorted order: the first leaf seen for a group is its anchor
    let mut groups: Vec<(NodeId, Vec<usize>)> = Vec::new();
    let mut slot_of: std::collections::HashMap<NodeId, usize> = Default::default();
    for &i in &r.order_by_x()[..windowed] {
        let i = i as usize;
        let root = group_root(r.leaves()[i].node);
        match slot_of.get(&root) {
            Some(&k) => groups[k].1.push(i),
            None => {
                slot_of.insert(root, groups.len());
                groups.push((root, vec![i]));
            }
        }
    }

    let clusters = groups
        .into_iter()
        .map(|(root, ids)| {
            let anchor = ids[0];
            let la = r.leaves()[anchor];
            let mut anchor_path = Vec::new();
            let mut n = la.node;
            while n != root {
                n = g.node(n).parent.expect("group root is an ancestor");
                anchor_path.push(n);
            }
            let members = ids[1..]
                .iter()
                .map(|&j| {
                    let lj = r.leaves()[j];
                    let mut n = lj.node;
                    let common = loop {
                        n = g.node(n).parent.expect("leaves share the group root");
                        if anchor_path.contains(&n) {
                            break n;
                        }
                    };
                    ClusterMember {
                        dx: lj.x - la.x,
                        dy: lj.y - la.y,
                        split_age: t - g.node(common).split_time().expect("internal"),
                    }
                })
                .collect();
            ClusterSummary {
                anchor_level: la.x - shift,
                anchor_leaf: anchor,
                members,
                window_k,
                genealogical_depth_b: depth_b,
            }
        })
        .collect();
    Ok(clusters)
}
