//! Most-recent-common-ancestor split times.
//!
//! Leaves are ranked in depth-first order. For two leaves at ranks `a < b`
//! the common ancestor is the shallowest of the ancestors shared by adjacent
//! pairs in between, and since split times increase along every path that is
//! the one with the earliest split. So `tau(a, b) = min(gap[a..b])` where
//! `gap[k]` is the split time separating ranks `k` and `k + 1`, and a sparse
//! table answers each query in O(1).

use crate::error::{Error, Result};
use crate::sim::{Genealogy, NodeId, NodeKind, ReplicaOutput};

#[derive(Debug, Clone)]
pub struct MrcaIndex {
    t_final: f64,
    rank: Vec<u32>,
    table: Vec<Vec<f64>>,
}

enum Step {
    Visit(NodeId),
    Cross(f64),
}

impl MrcaIndex {
    pub fn new(r: &ReplicaOutput) -> Self {
        Self::from_genealogy(&r.genealogy, r.n_leaves(), r.t_final)
    }

    pub fn from_genealogy(g: &Genealogy, n_leaves: usize, t_final: f64) -> Self {
        let mut rank = vec![u32::MAX; n_leaves];
        let mut gaps = Vec::with_capacity(n_leaves.saturating_sub(1));
        let mut gap = f64::INFINITY;
        let mut seen = 0u32;
        let mut stack = vec![Step::Visit(0)];
        while let Some(step) = stack.pop() {
            match step {
                Step::Cross(s) => gap = gap.min(s),
                Step::Visit(id) => match g.node(id).kind {
                    NodeKind::Internal { split_time, children } => {
                        stack.push(Step::Visit(children[1]));
                        stack.push(Step::Cross(split_time));
                        stack.push(Step::Visit(children[0]));
                    }
                    NodeKind::Leaf(i) => {
                        if seen > 0 {
                            gaps.push(gap);
                        }
                        gap = f64::INFINITY;
                        rank[i as usize] = seen;
                        seen += 1;
                    }
                    NodeKind::Pruned { .. } => {}
                },
            }
        }

        let mut table = vec![gaps];
        let mut width = 1;
        while 2 * width <= table[0].len() {
            let prev = table.last().unwrap();
            let next: Vec<f64> = (0..prev.len() - width).map(|i| prev[i].min(prev[i + width])).collect();
            table.push(next);
            width *= 2;
        }
        MrcaIndex { t_final, rank, table }
    }

    /// Split time of the most recent common ancestor of leaves `i` and `j`;
    /// `t_final` when `i == j`.
    pub fn mrca_time(&self, i: usize, j: usize) -> Result<f64> {
        let ri = *self.rank.get(i).ok_or(Error::InvalidLeaf(i))?;
        let rj = *self.rank.get(j).ok_or(Error::InvalidLeaf(j))?;
        if ri == rj {
            return Ok(self.t_final);
        }
        let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
        let (lo, hi) = (lo as usize, hi as usize);
        let level = (usize::BITS - 1 - (hi - lo).leading_zeros()) as usize;
        let row = &self.table[level];
        Ok(row[lo].min(row[hi - (1 << level)]))
    }
}

/// Convenience wrapper building a throwaway index.
pub fn mrca_time(r: &ReplicaOutput, i: usize, j: usize) -> Result<f64> {
    MrcaIndex::new(r).mrca_time(i, j)
}
