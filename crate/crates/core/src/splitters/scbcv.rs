use super::{check_folds, FoldAssignment, SplitError};
use crate::clustering::{fit_kmeans_variant, ClusteringResult, KMeansConfig};
use crate::data::Dataset;

/// Stratified cluster-based CV.
///
/// Each class is clustered on its own with `min(k_clusters, class size)`
/// centers. Within a cluster, members are ordered by distance to the centroid
/// (ties by instance index); clusters are concatenated in id order and classes
/// in class-id order. The resulting global list is dealt round-robin, so fold
/// 0 receives the first instance of the first class.
///
/// `minibatch = Some(batch_size)` swaps Lloyd's algorithm for mini-batch
/// K-Means. Every class is fitted with the same `seed`.
pub fn split_scbcv(
    ds: &Dataset,
    k_splits: usize,
    k_clusters: usize,
    seed: u64,
    minibatch: Option<usize>,
) -> Result<FoldAssignment, SplitError> {
    check_folds(k_splits, ds.n_instances())?;
    let x = ds.features();
    let mut order = Vec::with_capacity(ds.n_instances());
    for members in ds.class_members() {
        let sub = x.select(ndarray::Axis(0), &members);
        let mut cfg = KMeansConfig::new(k_clusters.clamp(1, members.len()), seed);
        if let Some(b) = minibatch {
            cfg = cfg.minibatch(b);
        }
        let fit = fit_kmeans_variant(sub.view(), &cfg)?;
        order.extend(ordered_by_cluster(&fit).into_iter().map(|local| members[local]));
    }
    Ok(FoldAssignment::round_robin(&order, k_splits))
}

/// Positions `0..n` grouped by cluster id, each group sorted by stored
/// distance then position. Noise (if any) comes last, by position.
pub(crate) fn ordered_by_cluster(fit: &ClusteringResult) -> Vec<usize> {
    let dist = fit.distances.as_deref();
    let key = |i: usize| dist.map_or(0.0, |d| d[i]);
    let mut out = Vec::with_capacity(fit.assignment.len());
    for mut group in fit.members() {
        group.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
        out.extend(group);
    }
    out.extend(
        fit.assignment
            .iter()
            .enumerate()
            .filter(|(_, &a)| a < 0)
            .map(|(i, _)| i),
    );
    out
}
