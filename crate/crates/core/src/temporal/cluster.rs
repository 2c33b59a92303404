use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

use super::AffinityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Average,
    Single,
    Complete,
}

impl FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "average" => Ok(Linkage::Average),
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            other => Err(format!("unknown linkage {other:?}")),
        }
    }
}

/// One agglomeration step. Leaves are clusters `0..n`; the cluster created
/// at step `s` (0-based) has id `n + s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge<F> {
    /// Smaller of the two merged cluster ids.
    pub cluster_a: usize,
    pub cluster_b: usize,
    pub height: F,
    /// Number of leaves in the new cluster.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram<F> {
    pub leaves: usize,
    pub merges: Vec<Merge<F>>,
    /// Leaves in left-before-right traversal order from the root.
    pub leaf_order: Vec<usize>,
}

/// Agglomerative clustering on the dissimilarity `1 - A`.
pub fn hierarchical_cluster<F: Scalar>(affinity: &AffinityMatrix<F>, linkage: Linkage) -> Dendrogram<F> {
    cluster_dissimilarity(&affinity.dissimilarity(), linkage)
}

/// Agglomerative clustering of a symmetric dissimilarity matrix.
///
/// Cluster distances are updated with the Lance-Williams recurrences.
/// Equal distances are resolved by the lexicographically smallest
/// `(smaller id, larger id)` pair.
pub fn cluster_dissimilarity<F: Scalar>(dissimilarity: &SquareMatrix<F>, linkage: Linkage) -> Dendrogram<F> {
    let n = dissimilarity.dim();
    let mut dist = dissimilarity.clone();
    // slot -> (cluster id, size); slots are reused by the merged cluster
    let mut slots: Vec<Option<(usize, usize)>> = (0..n).map(|i| Some((i, 1))).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut last_height = F::neg_infinity();

    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(F, (usize, usize), usize, usize)> = None;
        for p in 0..n {
            let Some((id_p, _)) = slots[p] else { continue };
            for q in (p + 1)..n {
                let Some((id_q, _)) = slots[q] else { continue };
                let d = dist[(p, q)];
                let key = (id_p.min(id_q), id_p.max(id_q));
                let better = match best {
                    None => true,
                    Some((bd, bkey, _, _)) => d < bd || (d == bd && key < bkey),
                };
                if better {
                    best = Some((d, key, p, q));
                }
            }
        }
        let (height, (a, b), p, q) = best.expect("at least two active clusters");
        let (_, size_p) = slots[p].expect("active");
        let (_, size_q) = slots[q].expect("active");
        for r in 0..n {
            if r == p || r == q || slots[r].is_none() {
                continue;
            }
            let (dp, dq) = (dist[(p, r)], dist[(q, r)]);
            let updated = match linkage {
                Linkage::Average => {
                    let (wp, wq) = (F::lit(size_p as f64), F::lit(size_q as f64));
                    (wp * dp + wq * dq) / (wp + wq)
                }
                Linkage::Single => dp.min(dq),
                Linkage::Complete => dp.max(dq),
            };
            dist[(p, r)] = updated;
            dist[(r, p)] = updated;
        }
        let size = size_p + size_q;
        slots[p] = Some((n + step, size));
        slots[q] = None;
        // these linkages are monotone; clamp rounding-level inversions
        let height = height.max(last_height);
        last_height = height;
        merges.push(Merge {
            cluster_a: a,
            cluster_b: b,
            height,
            size,
        });
    }

    let leaf_order = leaf_order(n, &merges);
    Dendrogram {
        leaves: n,
        merges,
        leaf_order,
    }
}

fn leaf_order<F>(n: usize, merges: &[Merge<F>]) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![n + merges.len() - 1];
    while let Some(id) = stack.pop() {
        if id < n {
            order.push(id);
        } else {
            let m = &merges[id - n];
            stack.push(m.cluster_b);
            stack.push(m.cluster_a);
        }
    }
    order
}

/// Flat labels with exactly `k` clusters, obtained by keeping the first
/// `n - k` merges.
///
/// Labels are numbered by first appearance in station index order.
pub fn cut_dendrogram<F>(dendrogram: &Dendrogram<F>, k: usize) -> Result<Vec<usize>> {
    let n = dendrogram.leaves;
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!(
            "cluster count {k} outside 1..={n}"
        )));
    }
    let mut parent: Vec<usize> = (0..(2 * n).saturating_sub(1)).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (step, m) in dendrogram.merges.iter().take(n - k).enumerate() {
        let id = n + step;
        let ra = find(&mut parent, m.cluster_a);
        let rb = find(&mut parent, m.cluster_b);
        parent[ra] = id;
        parent[rb] = id;
    }
    let mut roots: Vec<usize> = Vec::new();
    let labels = (0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            match roots.iter().position(|&x| x == r) {
                Some(l) => l,
                None => {
                    roots.push(r);
                    roots.len() - 1
                }
            }
        })
        .collect();
    Ok(labels)
}
