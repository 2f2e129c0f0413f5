//! Exact event-driven simulation of two-coordinate branching Brownian motion.
//!
//! Particles branch into two at rate 1. The first coordinate is stored on the
//! shifted scale `X = sqrt(2) * Xbar + 2t`, so over a lifetime `dt` it moves by
//! a Gaussian of mean `2 dt` and variance `2 dt`. The second coordinate `Ybar`
//! is a driftless standard Brownian motion that shares the branching times.
//! No time discretization is involved: each particle draws an exponential
//! lifetime and Gaussian displacements over it, and (optionally) the exact
//! minimum of the Brownian bridge joining the endpoints of its edge.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::rng;

pub type NodeId = u32;

/// Default bound on live plus finished particles before a run is aborted.
pub const DEFAULT_PARTICLE_CEILING: u64 = 200_000_000;

/// Level of the Bramson centering, `(3/2) ln t`.
#[inline]
pub fn bramson_shift(t: f64) -> f64 {
    1.5 * t.ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_final: f64,
    pub seed: u64,
    /// `None` runs the exact simulation.
    pub prune_epsilon: Option<f64>,
    /// Functionals `sum exp(-gamma X)` whose certificates gate pruning.
    pub gamma_grid: Vec<f64>,
    /// Keep descendants that may reach below `(3/2) ln t + k_max`.
    pub track_min_level: Option<f64>,
    pub track_y: bool,
    pub track_bridge_minima: bool,
    pub particle_ceiling: u64,
}

impl SimConfig {
    /// Exact simulation with both coordinates and no bridge minima.
    pub fn exact(t_final: f64, seed: u64) -> Self {
        SimConfig {
            t_final,
            seed,
            prune_epsilon: None,
            gamma_grid: vec![1.0],
            track_min_level: None,
            track_y: true,
            track_bridge_minima: false,
            particle_ceiling: DEFAULT_PARTICLE_CEILING,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_final must be positive and finite, got {}", self.t_final)));
        }
        if self.gamma_grid.is_empty() {
            return Err(Error::InvalidConfig("gamma_grid is empty".into()));
        }
        if self.gamma_grid.iter().any(|&g| !(g > 0.5 && g.is_finite())) {
            return Err(Error::InvalidConfig("gamma_grid entries must be finite and > 1/2".into()));
        }
        if self.gamma_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("gamma_grid must be strictly increasing".into()));
        }
        if let Some(eps) = self.prune_epsilon {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::InvalidConfig(format!("prune_epsilon must lie in (0, 1), got {eps}")));
            }
        }
        if let Some(k) = self.track_min_level {
            if !k.is_finite() {
                return Err(Error::InvalidConfig("track_min_level must be finite".into()));
            }
        }
        if self.particle_ceiling == 0 {
            return Err(Error::InvalidConfig("particle_ceiling must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NodeKind {
    Internal {
        split_time: f64,
        children: [NodeId; 2],
    },
    /// Index into [`ReplicaOutput::leaves`].
    Leaf(u32),
    /// A subtree discarded by first-moment pruning.
    Pruned {
        certificate: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub parent: Option<NodeId>,
    pub birth_time: f64,
    /// Random stream key; a stable identity of the node across pruned and exact runs.
    pub key: u64,
    pub kind: NodeKind,
}

impl Node {
    pub fn split_time(&self) -> Option<f64> {
        match self.kind {
            NodeKind::Internal { split_time, .. } => Some(split_time),
            _ => None,
        }
    }

    pub fn children(&self) -> Option<[NodeId; 2]> {
        match self.kind {
            NodeKind::Internal { children, .. } => Some(children),
            _ => None,
        }
    }
}

/// Binary genealogy. Node 0 is the root and every child has a larger id than
/// its parent, so iterating ids in reverse visits children before parents.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Genealogy {
    nodes: Vec<Node>,
}

impl Genealogy {
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        let g = Genealogy { nodes };
        g.validate()?;
        Ok(g)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Internal { .. })).count()
    }

    /// Checks the structural invariants: a single root, binary internal
    /// nodes, consistent parent links, split times strictly increasing along
    /// every root-to-leaf path, and `terminal count = internal count + 1`
    /// (pruned stubs count as terminal).
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Invariant(m));
        if self.nodes.is_empty() {
            return fail("genealogy has no nodes".into());
        }
        let mut internal = 0usize;
        for (i, node) in self.nodes.iter().enumerate() {
            match (i, node.parent) {
                (0, Some(_)) => return fail("root has a parent".into()),
                (0, None) => {}
                (_, None) => return fail(format!("node {i} is a second root")),
                (_, Some(p)) if p as usize >= i => return fail(format!("node {i} precedes its parent {p}")),
                _ => {}
            }
            if let NodeKind::Internal { split_time, children } = node.kind {
                internal += 1;
                if !(split_time > node.birth_time) {
                    return fail(format!("node {i} splits before it is born"));
                }
                for c in children {
                    let Some(child) = self.nodes.get(c as usize) else {
                        return fail(format!("node {i} has a dangling child {c}"));
                    };
                    if child.parent != Some(i as NodeId) {
                        return fail(format!("child {c} does not point back to {i}"));
                    }
                    if child.birth_time != split_time {
                        return fail(format!("child {c} born off its parent's split"));
                    }
                    if let Some(cs) = child.split_time() {
                        if !(cs > split_time) {
                            return fail(format!("split time not increasing at {c}"));
                        }
                    }
                }
            }
        }
        if self.nodes.len() - internal != internal + 1 {
            return fail(format!("{} terminal nodes for {} internal nodes", self.nodes.len() - internal, internal));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    /// Shifted position `sqrt(2) Xbar + 2t`.
    pub x: f64,
    /// Raw second coordinate.
    pub y: f64,
    pub node: NodeId,
    /// Sampled infimum of the shifted trajectory over `[0, t]`.
    pub path_min: Option<f64>,
}

#[derive(Debug)]
pub struct SortedLeaves {
    pub order: Vec<u32>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug)]
pub struct ReplicaOutput {
    pub t_final: f64,
    pub gamma_grid: Vec<f64>,
    leaves: Vec<Leaf>,
    pub genealogy: Genealogy,
    /// Per entry of `gamma_grid`: summed first-moment bounds of pruned subtrees.
    pub pruned_mass_bound: Vec<f64>,
    /// Summed expected counts below the tracked level over pruned subtrees.
    pub pruned_min_bound: f64,
    pub pruned_subtrees: usize,
    by_x: OnceLock<SortedLeaves>,
}

impl ReplicaOutput {
    pub fn new(t_final: f64, gamma_grid: Vec<f64>, leaves: Vec<Leaf>, genealogy: Genealogy) -> Result<Self> {
        if leaves.is_empty() {
            return Err(Error::Invariant("replica without leaves".into()));
        }
        for (i, leaf) in leaves.iter().enumerate() {
            match genealogy.nodes.get(leaf.node as usize).map(|n| n.kind) {
                Some(NodeKind::Leaf(j)) if j as usize == i => {}
                _ => return Err(Error::Invariant(format!("leaf {i} has a bad node link"))),
            }
        }
        let n_gamma = gamma_grid.len();
        Ok(ReplicaOutput {
            t_final,
            gamma_grid,
            leaves,
            genealogy,
            pruned_mass_bound: vec![0.0; n_gamma],
            pruned_min_bound: 0.0,
            pruned_subtrees: 0,
            by_x: OnceLock::new(),
        })
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    /// Overwrites the second coordinate of every leaf.
    pub fn set_y(&mut self, y: impl Fn(&Leaf) -> f64) {
        for leaf in &mut self.leaves {
            leaf.y = y(leaf);
        }
        self.by_x = OnceLock::new();
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    /// Leaf indices sorted by ascending `x`.
    pub fn order_by_x(&self) -> &[u32] {
        &self.sorted().order
    }

    /// Leaf coordinates laid out contiguously in ascending `x`, ties by index.
    pub fn sorted(&self) -> &SortedLeaves {
        self.by_x.get_or_init(|| {
            let mut keyed: Vec<(f64, u32)> = self.leaves.iter().enumerate().map(|(i, l)| (l.x, i as u32)).collect();
            keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let order: Vec<u32> = keyed.into_iter().map(|(_, i)| i).collect();
            SortedLeaves {
                x: order.iter().map(|&i| self.leaves[i as usize].x).collect(),
                y: order.iter().map(|&i| self.leaves[i as usize].y).collect(),
                order,
            }
        })
    }

    pub fn min_x(&self) -> f64 {
        self.sorted().x[0]
    }
}

/// Outcome of the pruning test for a particle at `(x, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneDecision {
    pub prune: bool,
    /// Largest of the tracked bounds.
    pub certificate: f64,
    /// `B_gamma(x, s)` per entry of the gamma grid.
    pub gamma_bounds: Vec<f64>,
    /// Expected number of descendants at or below the tracked level.
    pub min_bound: Option<f64>,
}

/// Expected number of descendants of a particle at `(x, s)` ending at or below `level` at time `t`.
pub fn expected_below(x: f64, s: f64, t: f64, level: f64) -> f64 {
    let r = t - s;
    if r <= 0.0 {
        return if x <= level { 1.0 } else { 0.0 };
    }
    let z = (level - x - 2.0 * r) / (2.0 * r).sqrt();
    r.exp() * 0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// First-moment pruning test.
///
/// For every gamma the expected future contribution of the subtree rooted at
/// `(x, s)` to `sum exp(-gamma X_i(t))` is `exp(-gamma x + (1-gamma)^2 (t-s))`.
/// The subtree is discarded only when every such bound lies below
/// `eps * t^(-3 gamma / 2)` and, when a minimum level is tracked, the expected
/// number of descendants below it is at most `eps`.
pub fn prune_decision(x: f64, s: f64, config: &SimConfig) -> PruneDecision {
    let t = config.t_final;
    let eps = config.prune_epsilon;
    let mut all_small = eps.is_some();
    let gamma_bounds: Vec<f64> = config
        .gamma_grid
        .iter()
        .map(|&g| {
            let b = (-g * x + (1.0 - g) * (1.0 - g) * (t - s)).exp();
            if let Some(e) = eps {
                all_small &= b <= e * t.powf(-1.5 * g);
            }
            b
        })
        .collect();
    let min_bound = config.track_min_level.map(|k| expected_below(x, s, t, bramson_shift(t) + k));
    if let (Some(m), Some(e)) = (min_bound, eps) {
        all_small &= m <= e;
    }
    let certificate = gamma_bounds.iter().copied().chain(min_bound).fold(0.0, f64::max);
    PruneDecision { prune: all_small, certificate, gamma_bounds, min_bound }
}

/// Allocation-free form of [`prune_decision`] used inside the simulation loop.
struct Pruner {
    t: f64,
    eps: f64,
    /// `(gamma, (1-gamma)^2, ln eps - 1.5 gamma ln t)`
    gammas: Vec<(f64, f64, f64)>,
    min_level: Option<f64>,
}

impl Pruner {
    fn new(config: &SimConfig) -> Option<Self> {
        let eps = config.prune_epsilon?;
        let t = config.t_final;
        let gammas =
            config.gamma_grid.iter().map(|&g| (g, (1.0 - g) * (1.0 - g), eps.ln() - 1.5 * g * t.ln())).collect();
        Some(Pruner { t, eps, gammas, min_level: config.track_min_level.map(|k| bramson_shift(t) + k) })
    }

    /// Returns the bounds when the subtree may be discarded.
    fn assess(&self, x: f64, s: f64, bounds: &mut [f64]) -> Option<f64> {
        let r = self.t - s;
        for (slot, &(g, curv, log_thr)) in bounds.iter_mut().zip(&self.gammas) {
            let log_b = -g * x + curv * r;
            if log_b > log_thr {
                return None;
            }
            *slot = log_b.exp();
        }
        match self.min_level {
            Some(level) => {
                let m = expected_below(x, s, self.t, level);
                (m <= self.eps).then_some(m)
            }
            None => Some(0.0),
        }
    }
}

/// Inverse-CDF sample of the minimum of a bridge with variance rate 2 from
/// `a` to `b` over a duration `dt`, for which
/// `P(min <= m) = exp(-(a - m)(b - m) / dt)` when `m <= min(a, b)`.
pub fn bridge_min_sample(a: f64, b: f64, dt: f64, u: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("bridge duration must be positive, got {dt}")));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("uniform draw must lie in (0, 1), got {u}")));
    }
    Ok(bridge_min(a, b, dt, u))
}

#[inline]
fn bridge_min(a: f64, b: f64, dt: f64, u: f64) -> f64 {
    let d = a - b;
    let m = 0.5 * ((a + b) - (d * d - 4.0 * dt * u.ln()).sqrt());
    // rounding can push m a hair above min(a, b) when u is close to 1
    m.min(a).min(b)
}

struct Pending {
    parent: Option<(NodeId, u8)>,
    birth: f64,
    x: f64,
    y: f64,
    path_min: f64,
    key: u64,
}

/// Runs one replica.
pub fn simulate(config: &SimConfig) -> Result<ReplicaOutput> {
    config.validate()?;
    let t = config.t_final;
    let pruner = Pruner::new(config);
    let n_gamma = config.gamma_grid.len();
    let mut bounds = vec![0.0; n_gamma];
    let mut pruned_mass = vec![0.0; n_gamma];
    let mut pruned_min = 0.0;
    let mut pruned_subtrees = 0usize;

    let mut nodes: Vec<Node> = Vec::new();
    let mut leaves: Vec<Leaf> = Vec::new();
    let mut stack = vec![Pending {
        parent: None,
        birth: 0.0,
        x: 0.0,
        y: 0.0,
        path_min: f64::INFINITY,
        key: rng::root_key(config.seed),
    }];

    while let Some(p) = stack.pop() {
        let id = nodes.len() as NodeId;
        if let Some((pid, slot)) = p.parent {
            if let NodeKind::Internal { children, .. } = &mut nodes[pid as usize].kind {
                children[slot as usize] = id;
            }
            if let Some(pr) = &pruner {
                if let Some(m) = pr.assess(p.x, p.birth, &mut bounds) {
                    let mut certificate = m;
                    for (acc, b) in pruned_mass.iter_mut().zip(&bounds) {
                        *acc += b;
                        certificate = certificate.max(*b);
                    }
                    pruned_min += m;
                    pruned_subtrees += 1;
                    nodes.push(Node {
                        parent: Some(pid),
                        birth_time: p.birth,
                        key: p.key,
                        kind: NodeKind::Pruned { certificate },
                    });
                    continue;
                }
            }
        }

        // Draw order is fixed: lifetime, X step, Y step, bridge uniform.
        let mut rng = rng::node_rng(p.key);
        let lifetime: f64 = Exp1.sample(&mut rng);
        let end = p.birth + lifetime;
        let terminal = end >= t;
        let dt = if terminal { t - p.birth } else { lifetime };
        let zx: f64 = StandardNormal.sample(&mut rng);
        let zy: f64 = StandardNormal.sample(&mut rng);
        let x1 = p.x + 2.0 * dt + (2.0 * dt).sqrt() * zx;
        let y1 = if config.track_y { p.y + dt.sqrt() * zy } else { 0.0 };
        let path_min = if config.track_bridge_minima {
            let u: f64 = rng.sample(Open01);
            p.path_min.min(bridge_min(p.x, x1, dt, u))
        } else {
            p.path_min
        };

        let parent = p.parent.map(|(pid, _)| pid);
        if terminal {
            nodes.push(Node { parent, birth_time: p.birth, key: p.key, kind: NodeKind::Leaf(leaves.len() as u32) });
            leaves.push(Leaf { x: x1, y: y1, node: id, path_min: config.track_bridge_minima.then_some(path_min) });
        } else {
            nodes.push(Node {
                parent,
                birth_time: p.birth,
                key: p.key,
                kind: NodeKind::Internal { split_time: end, children: [NodeId::MAX; 2] },
            });
            for slot in [1u8, 0] {
                stack.push(Pending {
                    parent: Some((id, slot)),
                    birth: end,
                    x: x1,
                    y: y1,
                    path_min,
                    key: rng::child_key(p.key, slot),
                });
            }
        }

        let live = (leaves.len() + stack.len()) as u64;
        if live > config.particle_ceiling || nodes.len() >= NodeId::MAX as usize {
            return Err(Error::ResourceLimit { ceiling: config.particle_ceiling, t_reached: p.birth });
        }
    }

    if leaves.is_empty() {
        // only reachable with pruning: every child of the root was discarded
        return Err(Error::AllPruned { subtrees: pruned_subtrees });
    }
    let genealogy = Genealogy { nodes };
    if cfg!(debug_assertions) {
        genealogy.validate()?;
    }
    let mut out = ReplicaOutput::new(t, config.gamma_grid.clone(), leaves, genealogy)?;
    out.pruned_mass_bound = pruned_mass;
    out.pruned_min_bound = pruned_min;
    out.pruned_subtrees = pruned_subtrees;
    Ok(out)
}

/// Minimum over leaves of the sampled trajectory infimum.
pub fn global_infimum(r: &ReplicaOutput) -> Result<f64> {
    r.leaves().iter().try_fold(f64::INFINITY, |acc, leaf| {
        leaf.path_min.map(|m| acc.min(m)).ok_or_else(|| Error::MissingData("bridge minima were not tracked".into()))
    })
}
