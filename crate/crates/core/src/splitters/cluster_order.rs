use super::scbcv::ordered_by_cluster;
use super::{check_folds, FoldAssignment, SplitError};
use crate::clustering::{
    agglomerative_fit, dbscan_fit, distances_to_cluster_means, fit_kmeans_variant, ClusteringResult, DbscanParams,
    KMeansConfig, Linkage,
};
use crate::data::Dataset;

/// Shared core of the unstratified cluster splitters.
///
/// Clusters are taken in id order with members sorted by stored distance
/// (distance to the cluster mean is computed when the result carries none).
/// DBSCAN noise forms one trailing pseudo-cluster ordered by index.
pub fn split_cluster_unstratified(
    ds: &Dataset,
    k_splits: usize,
    clustering: &ClusteringResult,
) -> Result<FoldAssignment, SplitError> {
    let n = ds.n_instances();
    if clustering.assignment.len() != n || n == 0 {
        return Err(SplitError::ClusteringMismatch {
            got: clustering.assignment.len(),
            expected: n,
        });
    }
    check_folds(k_splits, n)?;
    let order = if clustering.distances.is_some() {
        ordered_by_cluster(clustering)
    } else {
        let mut filled = clustering.clone();
        filled.distances = Some(distances_to_cluster_means(
            ds.features(),
            &clustering.assignment,
            clustering.n_clusters,
        ));
        ordered_by_cluster(&filled)
    };
    Ok(FoldAssignment::round_robin(&order, k_splits))
}

/// K-Means (or mini-batch) on the whole dataset with `min(k_clusters, n)` centers.
pub fn split_kcbcv(
    ds: &Dataset,
    k_splits: usize,
    k_clusters: usize,
    seed: u64,
    minibatch: Option<usize>,
) -> Result<FoldAssignment, SplitError> {
    check_folds(k_splits, ds.n_instances())?;
    let mut cfg = KMeansConfig::new(k_clusters.clamp(1, ds.n_instances()), seed);
    if let Some(b) = minibatch {
        cfg = cfg.minibatch(b);
    }
    let fit = fit_kmeans_variant(ds.features(), &cfg)?;
    split_cluster_unstratified(ds, k_splits, &fit)
}

pub fn split_acbcv(
    ds: &Dataset,
    k_splits: usize,
    n_clusters: usize,
    linkage: Linkage,
) -> Result<FoldAssignment, SplitError> {
    check_folds(k_splits, ds.n_instances())?;
    let fit = agglomerative_fit(ds.features(), n_clusters.clamp(1, ds.n_instances()), linkage)?;
    split_cluster_unstratified(ds, k_splits, &fit)
}

pub fn split_dbscanbcv(ds: &Dataset, k_splits: usize, params: &DbscanParams) -> Result<FoldAssignment, SplitError> {
    check_folds(k_splits, ds.n_instances())?;
    let fit = dbscan_fit(ds.features(), params)?;
    split_cluster_unstratified(ds, k_splits, &fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::test_util::blobs;
    use crate::clustering::NOISE;
    use ndarray::{array, Array2};

    fn unlabeled(x: Array2<f64>) -> Dataset {
        let n = x.nrows();
        let labels = (0..n).map(|i| i % 2).collect();
        Dataset::new("t", x, labels, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn single_sorted_cluster_alternates() {
        let ds = unlabeled(array![[0.0], [1.0], [2.0], [3.0]]);
        let fit = ClusteringResult {
            assignment: vec![0; 4],
            n_clusters: 1,
            centroids: None,
            distances: Some(vec![0.1, 0.2, 0.3, 0.4]),
        };
        let fa = split_cluster_unstratified(&ds, 2, &fit).unwrap();
        assert_eq!(fa.fold_of, vec![0, 1, 0, 1]);
    }

    #[test]
    fn missing_distances_use_cluster_means() {
        // mean 1.5: distances 1.5, .5, .5, 1.5 -> order 1,2,0,3
        let ds = unlabeled(array![[0.0], [1.0], [2.0], [3.0]]);
        let fit = ClusteringResult {
            assignment: vec![0; 4],
            n_clusters: 1,
            centroids: None,
            distances: None,
        };
        let fa = split_cluster_unstratified(&ds, 2, &fit).unwrap();
        assert_eq!(fa.fold_of, vec![0, 0, 1, 1]);
    }

    #[test]
    fn noise_point_is_placed() {
        let ds = unlabeled(array![[0.0], [0.1], [0.2], [5.0], [5.1], [5.2], [20.0]]);
        let fit = dbscan_fit(ds.features(), &DbscanParams { epsilon: 0.5, min_samples: 2 }).unwrap();
        assert_eq!(fit.n_clusters, 2);
        assert_eq!(fit.assignment[6], NOISE);
        let fa = split_cluster_unstratified(&ds, 2, &fit).unwrap();
        assert!(fa.is_valid_partition());
        assert_eq!(fa.fold_of.len(), 7);
        // noise is dealt last: position 6 -> fold 0
        assert_eq!(fa.fold_of[6], 0);
    }

    #[test]
    fn kcbcv_spreads_each_blob() {
        let (x, blob) = blobs(&[(0.0, 0.0), (25.0, 25.0)], 7, 0.6, 3);
        let ds = unlabeled(x);
        let fa = split_kcbcv(&ds, 2, 2, 1, None).unwrap();
        for b in 0..2 {
            for fold in 0..2 {
                assert!((0..14).any(|i| blob[i] == b && fa.fold_of[i] == fold));
            }
        }
    }

    #[test]
    fn mismatched_clustering_is_rejected() {
        let ds = unlabeled(array![[0.0], [1.0]]);
        let fit = ClusteringResult {
            assignment: vec![0],
            n_clusters: 1,
            centroids: None,
            distances: None,
        };
        assert!(matches!(
            split_cluster_unstratified(&ds, 2, &fit),
            Err(SplitError::ClusteringMismatch { got: 1, expected: 2 })
        ));
    }

    #[test]
    fn acbcv_and_dbscanbcv_partition() {
        let (x, _) = blobs(&[(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)], 10, 1.0, 8);
        let ds = unlabeled(x);
        for k in [2, 5, 10] {
            assert!(split_acbcv(&ds, k, 3, Linkage::Average).unwrap().is_valid_partition());
            let p = DbscanParams { epsilon: 1.5, min_samples: 4 };
            assert!(split_dbscanbcv(&ds, k, &p).unwrap().is_valid_partition());
        }
    }
}
