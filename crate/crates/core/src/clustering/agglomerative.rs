use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{check_matrix, distances_to_cluster_means, relabel_by_first_member, ClusteringError, ClusteringResult};
use crate::distance::euclidean;

/// Inter-cluster distance used when merging.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    #[default]
    Average,
}

/// One merge between the clusters containing points `a` and `b`.
#[derive(Debug, Clone, Copy)]
struct Merge {
    a: usize,
    b: usize,
    height: f64,
}

/// Condensed upper-triangle distance storage.
struct Condensed {
    n: usize,
    data: Vec<f64>,
}

impl Condensed {
    fn new(x: ArrayView2<f64>) -> Self {
        let n = x.nrows();
        let mut data = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                data.push(euclidean(x.row(i), x.row(j)));
            }
        }
        Self { n, data }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j - i - 1
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }
}

/// Nearest-neighbor-chain clustering with Lance-Williams updates. All three
/// linkages are reducible, so sorting the merges by height reproduces the
/// greedy closest-pair dendrogram.
fn nn_chain(x: ArrayView2<f64>, linkage: Linkage) -> Vec<Merge> {
    let n = x.nrows();
    let mut dist = Condensed::new(x);
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for _ in 1..n {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("two clusters remain"));
        }
        let (a, b) = loop {
            let a = *chain.last().unwrap();
            let prev = (chain.len() >= 2).then(|| chain[chain.len() - 2]);
            let mut best = prev;
            let mut best_d = prev.map_or(f64::INFINITY, |p| dist.get(a, p));
            for c in 0..n {
                if active[c] && c != a {
                    let d = dist.get(a, c);
                    if d < best_d {
                        best_d = d;
                        best = Some(c);
                    }
                }
            }
            let b = best.expect("another active cluster exists");
            if Some(b) == prev {
                chain.pop();
                chain.pop();
                break (a, b);
            }
            chain.push(b);
        };
        let height = dist.get(a, b);
        let (keep, gone) = (a.min(b), a.max(b));
        let (na, nb) = (size[keep] as f64, size[gone] as f64);
        for c in 0..n {
            if !active[c] || c == keep || c == gone {
                continue;
            }
            let (dk, dg) = (dist.get(keep, c), dist.get(gone, c));
            let merged = match linkage {
                Linkage::Single => dk.min(dg),
                Linkage::Complete => dk.max(dg),
                Linkage::Average => (na * dk + nb * dg) / (na + nb),
            };
            dist.set(keep, c, merged);
        }
        active[gone] = false;
        size[keep] += size[gone];
        merges.push(Merge { a, b, height });
    }
    merges.sort_by(|p, q| p.height.total_cmp(&q.height));
    merges
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Ascending merge heights of the full dendrogram (`n - 1` values).
pub fn merge_heights(x: ArrayView2<f64>, linkage: Linkage) -> Vec<f64> {
    nn_chain(x, linkage).iter().map(|m| m.height).collect()
}

/// Bottom-up clustering cut at `n_clusters`. Cluster ids follow each
/// cluster's lowest member; `distances` holds the distance to the cluster mean.
pub fn agglomerative_fit(
    x: ArrayView2<f64>,
    n_clusters: usize,
    linkage: Linkage,
) -> Result<ClusteringResult, ClusteringError> {
    check_matrix(x)?;
    let n = x.nrows();
    if n_clusters == 0 {
        return Err(ClusteringError::InvalidParameter("n_clusters must be at least 1".into()));
    }
    if n_clusters > n {
        return Err(ClusteringError::TooManyClusters { k: n_clusters, n });
    }
    let merges = nn_chain(x, linkage);
    let mut parent: Vec<usize> = (0..n).collect();
    for m in merges.iter().take(n - n_clusters) {
        let ra = find(&mut parent, m.a);
        let rb = find(&mut parent, m.b);
        parent[ra.max(rb)] = ra.min(rb);
    }
    let roots: Vec<isize> = (0..n).map(|i| find(&mut parent, i) as isize).collect();
    let (assignment, count) = relabel_by_first_member(&roots);
    let distances = distances_to_cluster_means(x, &assignment, count);
    Ok(ClusteringResult {
        assignment,
        n_clusters: count,
        centroids: None,
        distances: Some(distances),
    })
}
