//! Average-linkage agglomerative clustering of replicas.

use serde::{Deserialize, Serialize};

use super::overlap::OverlapMatrix;

/// One merge; nodes `0..R` are leaves, node `R + k` is created by merge `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
    /// Leaf order read off the tree left to right.
    pub order: Vec<usize>,
}

impl Dendrogram {
    /// Parent of every node (`None` for the root), length `2R - 1`.
    pub fn parents(&self) -> Vec<Option<usize>> {
        let total = self.n_leaves + self.merges.len();
        let mut p = vec![None; total];
        for (k, m) in self.merges.iter().enumerate() {
            p[m.left] = Some(self.n_leaves + k);
            p[m.right] = Some(self.n_leaves + k);
        }
        p
    }

    /// Leaves under the two children of the root.
    pub fn first_split(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        let root = self.merges.last()?;
        Some((self.leaves(root.left), self.leaves(root.right)))
    }

    pub fn leaves(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            if v < self.n_leaves {
                out.push(v);
            } else {
                let m = self.merges[v - self.n_leaves];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
        out
    }
}

/// Clusters with distance `(1 - q_ab) / 2` and average linkage.
///
/// Ties merge the pair with the smallest node ids, so the tree is
/// deterministic.
pub fn hierarchical_cluster(m: &OverlapMatrix) -> Dendrogram {
    let r = m.n_replicas();
    let total = (2 * r).saturating_sub(1).max(r);
    let mut dist = vec![vec![0.0; total]; total];
    for a in 0..r {
        for b in 0..r {
            dist[a][b] = (1.0 - m.q[(a, b)]) / 2.0;
        }
    }
    let mut size = vec![1usize; total];
    let mut active: Vec<usize> = (0..r).collect();
    let mut merges = Vec::with_capacity(r.saturating_sub(1));
    while active.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for (ia, &a) in active.iter().enumerate() {
            for &b in &active[ia + 1..] {
                if dist[a][b] < best.0 {
                    best = (dist[a][b], a, b);
                }
            }
        }
        let (h, a, b) = best;
        let node = r + merges.len();
        size[node] = size[a] + size[b];
        for &c in &active {
            if c != a && c != b {
                let d = (dist[a][c] * size[a] as f64 + dist[b][c] * size[b] as f64) / size[node] as f64;
                dist[node][c] = d;
                dist[c][node] = d;
            }
        }
        active.retain(|&c| c != a && c != b);
        active.push(node);
        merges.push(Merge { left: a, right: b, height: h, size: size[node] });
    }
    let mut d = Dendrogram { n_leaves: r, merges, order: Vec::new() };
    d.order = match (r, d.merges.len()) {
        (0, _) => Vec::new(),
        (_, 0) => vec![0],
        (_, k) => d.leaves(r + k - 1),
    };
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn single_leaf() {
        let m = OverlapMatrix { q: DMatrix::from_element(1, 1, 1.0), t: 0.0 };
        let d = hierarchical_cluster(&m);
        assert!(d.merges.is_empty());
        assert_eq!(d.order, vec![0]);
        assert_eq!(d.parents(), vec![None]);
    }
}
