use serde::{Deserialize, Serialize};

use crate::clustering::{estimate_cluster_count, estimate_dbscan_params, ClusterCountParams, DbscanParams};
use crate::data::{classify_balance, imbalance_index, BalanceClass, Dataset};

/// Summary of a dataset plus its estimated clustering hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub id: String,
    pub path: String,
    pub n_instances: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub class_counts: Vec<usize>,
    pub class_names: Vec<String>,
    pub imbalance_index: f64,
    pub balance: BalanceClass,
    pub estimated_clusters: usize,
    /// `None` when the dataset is too small for the estimator.
    pub dbscan: Option<DbscanParams>,
}

/// Computes the summary on `ds` (already standardized if the run is).
///
/// Cluster-count estimation falls back to the lower clamp when the dataset is
/// too small to sample.
pub fn analyze_dataset(ds: &Dataset, path: &str, seed: u64, params: &ClusterCountParams) -> DatasetMeta {
    let dist = ds.class_distribution();
    let estimated_clusters = estimate_cluster_count(ds.features(), seed, params).unwrap_or_else(|e| {
        log::warn!("{}: cluster count estimation failed ({e}); using {}", ds.name(), params.min_clusters);
        params.min_clusters
    });
    let dbscan = estimate_dbscan_params(ds.features())
        .map_err(|e| log::warn!("{}: DBSCAN parameter estimation failed ({e})", ds.name()))
        .ok();
    DatasetMeta {
        id: ds.name().to_string(),
        path: path.to_string(),
        n_instances: ds.n_instances(),
        n_features: ds.n_features(),
        n_classes: ds.n_classes(),
        class_counts: dist.counts.clone(),
        class_names: ds.class_names().to_vec(),
        imbalance_index: imbalance_index(&dist),
        balance: classify_balance(ds),
        estimated_clusters,
        dbscan,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthSpec};

    #[test]
    fn summary_fields() {
        let ds = generate(&SynthSpec::imbalanced("imb", 120, 3, 4)).unwrap();
        let meta = analyze_dataset(&ds, "imb.tsv", 1, &ClusterCountParams::default());
        assert_eq!(meta.n_instances, 120);
        assert_eq!(meta.balance, BalanceClass::Imbalanced);
        assert!((2..=7).contains(&meta.estimated_clusters));
        assert_eq!(meta.dbscan.unwrap().min_samples, 6);
    }

    #[test]
    fn tiny_dataset_falls_back() {
        let ds = generate(&SynthSpec::balanced("tiny", 6, 4, 4)).unwrap();
        let meta = analyze_dataset(&ds, "tiny.tsv", 1, &ClusterCountParams::default());
        assert_eq!(meta.estimated_clusters, 2);
        assert!(meta.dbscan.is_none());
    }
}
