use std::collections::VecDeque;

use ndarray::ArrayView2;

use super::{check_matrix, distances_to_cluster_means, ClusteringError, ClusteringResult, DbscanParams, NOISE};
use crate::distance::pairwise;

/// Density clustering with O(n²) neighbor search.
///
/// A point is core when at least `min_samples` points (itself included) lie
/// within `epsilon`. Clusters grow from cores in index order, so cluster ids
/// follow the lowest core index of each cluster, and a border point reachable
/// from several clusters joins the one discovered first. `distances` holds the
/// distance to the cluster mean (0 for noise).
pub fn dbscan_fit(x: ArrayView2<f64>, params: &DbscanParams) -> Result<ClusteringResult, ClusteringError> {
    params.validate()?;
    check_matrix(x)?;
    let n = x.nrows();
    let dist = pairwise(x);
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| dist[i * n + j] <= params.epsilon).collect())
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= params.min_samples).collect();

    let mut assignment = vec![NOISE; n];
    let mut n_clusters = 0usize;
    for start in 0..n {
        if !core[start] || assignment[start] != NOISE {
            continue;
        }
        let id = n_clusters as isize;
        n_clusters += 1;
        assignment[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbors[p] {
                if assignment[q] != NOISE {
                    continue;
                }
                assignment[q] = id;
                if core[q] {
                    queue.push_back(q);
                }
            }
        }
    }
    let distances = distances_to_cluster_means(x, &assignment, n_clusters);
    Ok(ClusteringResult {
        assignment,
        n_clusters,
        centroids: None,
        distances: Some(distances),
    })
}
