//! Fold-assignment strategies behind one interface.
//!
//! Every strategy ends by dealing a single ordered index stream round-robin
//! over the folds, so fold sizes always differ by at most one and every fold
//! is nonempty whenever `n >= k`. What differs is how the stream is ordered:
//!
//! | kind | stream order |
//! |------|--------------|
//! | `kfold` | uniform random permutation (chopped into contiguous blocks) |
//! | `scv` | classes in id order, members shuffled |
//! | `scbcv`, `scbcv_mini` | classes in id order; per class, K-Means clusters in id order, members by distance to centroid |
//! | `kcbcv`, `kcbcv_mini`, `acbcv`, `dbscanbcv` | clusters of the whole dataset, members by distance to centroid / cluster mean; DBSCAN noise last |
//! | `dbscv` | per class, a nearest-neighbor walk from a random start |
//! | `dobscv` | per class, groups of a random seed plus its `k - 1` nearest unassigned neighbors |

mod cluster_order;
mod neighbor;
mod scbcv;
mod simple;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{ClusteringError, DbscanParams, Linkage};
use crate::data::Dataset;

pub use cluster_order::{split_acbcv, split_cluster_unstratified, split_dbscanbcv, split_kcbcv};
pub use neighbor::{split_dbscv, split_dobscv};
pub use scbcv::split_scbcv;
pub use simple::{split_kfold, split_scv};

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("{k} folds requested for {n} instances")]
    TooManyFolds { k: usize, n: usize },
    #[error("splitter '{0}' needs cluster parameters")]
    MissingClusterParams(SplitterKind),
    #[error("splitter '{kind}' does not accept {params}")]
    WrongClusterParams { kind: SplitterKind, params: String },
    #[error("clustering covers {got} instances, dataset has {expected}")]
    ClusteringMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitterKind {
    Kfold,
    Scv,
    Scbcv,
    ScbcvMini,
    Kcbcv,
    KcbcvMini,
    Acbcv,
    Dbscanbcv,
    Dbscv,
    Dobscv,
}

impl SplitterKind {
    pub const ALL: [SplitterKind; 10] = [
        SplitterKind::Kfold,
        SplitterKind::Scv,
        SplitterKind::Scbcv,
        SplitterKind::ScbcvMini,
        SplitterKind::Kcbcv,
        SplitterKind::KcbcvMini,
        SplitterKind::Acbcv,
        SplitterKind::Dbscanbcv,
        SplitterKind::Dbscv,
        SplitterKind::Dobscv,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitterKind::Kfold => "kfold",
            SplitterKind::Scv => "scv",
            SplitterKind::Scbcv => "scbcv",
            SplitterKind::ScbcvMini => "scbcv_mini",
            SplitterKind::Kcbcv => "kcbcv",
            SplitterKind::KcbcvMini => "kcbcv_mini",
            SplitterKind::Acbcv => "acbcv",
            SplitterKind::Dbscanbcv => "dbscanbcv",
            SplitterKind::Dbscv => "dbscv",
            SplitterKind::Dobscv => "dobscv",
        }
    }

    pub fn is_cluster_based(self) -> bool {
        matches!(
            self,
            SplitterKind::Scbcv
                | SplitterKind::ScbcvMini
                | SplitterKind::Kcbcv
                | SplitterKind::KcbcvMini
                | SplitterKind::Acbcv
                | SplitterKind::Dbscanbcv
        )
    }

    /// Whether per-class fold counts are guaranteed to differ by at most one.
    pub fn is_stratified(self) -> bool {
        matches!(
            self,
            SplitterKind::Scv
                | SplitterKind::Scbcv
                | SplitterKind::ScbcvMini
                | SplitterKind::Dbscv
                | SplitterKind::Dobscv
        )
    }

    pub fn uses_minibatch(self) -> bool {
        matches!(self, SplitterKind::ScbcvMini | SplitterKind::KcbcvMini)
    }
}

impl fmt::Display for SplitterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitterKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase().replace('-', "_");
        SplitterKind::ALL
            .into_iter()
            .find(|k| k.as_str() == lower)
            .ok_or_else(|| format!("unknown splitter kind '{s}'"))
    }
}

/// Clustering hyperparameters carried by cluster-based splitters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ClusterParams {
    /// K-Means family; `batch_size` only matters for the mini-batch kinds.
    Kmeans { k_clusters: usize, batch_size: usize },
    Agglomerative { n_clusters: usize, linkage: Linkage },
    Dbscan(DbscanParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitterSpec {
    pub kind: SplitterKind,
    pub k_splits: usize,
    pub cluster_params: Option<ClusterParams>,
    pub seed: u64,
}

impl SplitterSpec {
    pub fn new(kind: SplitterKind, k_splits: usize, seed: u64) -> Self {
        Self {
            kind,
            k_splits,
            cluster_params: None,
            seed,
        }
    }

    pub fn with_cluster_params(mut self, params: ClusterParams) -> Self {
        self.cluster_params = Some(params);
        self
    }

    pub fn validate(&self) -> Result<(), SplitError> {
        if self.k_splits < 2 {
            return Err(SplitError::TooFewFolds(self.k_splits));
        }
        let wrong = |p: &ClusterParams| SplitError::WrongClusterParams {
            kind: self.kind,
            params: format!("{p:?}"),
        };
        match (self.kind, &self.cluster_params) {
            (k, None) if k.is_cluster_based() => Err(SplitError::MissingClusterParams(k)),
            (k, Some(p)) if !k.is_cluster_based() => Err(SplitError::WrongClusterParams {
                kind: k,
                params: format!("{p:?}"),
            }),
            (
                SplitterKind::Scbcv | SplitterKind::ScbcvMini | SplitterKind::Kcbcv | SplitterKind::KcbcvMini,
                Some(p @ ClusterParams::Kmeans { k_clusters, batch_size }),
            ) => {
                if *k_clusters == 0 || *batch_size == 0 {
                    Err(wrong(p))
                } else {
                    Ok(())
                }
            }
            (SplitterKind::Acbcv, Some(p @ ClusterParams::Agglomerative { n_clusters, .. })) => {
                if *n_clusters == 0 {
                    Err(wrong(p))
                } else {
                    Ok(())
                }
            }
            (SplitterKind::Dbscanbcv, Some(ClusterParams::Dbscan(p))) => Ok(p.validate()?),
            (_, Some(p)) => Err(wrong(p)),
            (_, None) => Ok(()),
        }
    }
}

/// Fold id per instance for `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    /// Deals `order[i]` into fold `i % k`.
    pub fn round_robin(order: &[usize], k: usize) -> Self {
        let mut fold_of = vec![usize::MAX; order.len()];
        for (pos, &i) in order.iter().enumerate() {
            fold_of[i] = pos % k;
        }
        Self { k, fold_of }
    }

    pub fn n_instances(&self) -> usize {
        self.fold_of.len()
    }

    /// Members of each fold, ascending.
    pub fn folds(&self) -> Vec<Vec<usize>> {
        let mut folds = vec![Vec::new(); self.k];
        for (i, &f) in self.fold_of.iter().enumerate() {
            folds[f].push(i);
        }
        folds
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }

    /// `counts[fold][class]`.
    pub fn class_counts(&self, labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
        let mut counts = vec![vec![0; n_classes]; self.k];
        for (&f, &l) in self.fold_of.iter().zip(labels) {
            counts[f][l] += 1;
        }
        counts
    }

    /// Checks the partition law: every fold id in range and, for `n >= k`,
    /// every fold nonempty.
    pub fn is_valid_partition(&self) -> bool {
        if self.fold_of.iter().any(|&f| f >= self.k) {
            return false;
        }
        self.n_instances() < self.k || self.fold_sizes().iter().all(|&s| s > 0)
    }
}

/// `(train, test)` index lists per fold; pair `j` tests on fold `j`.
pub fn materialize_folds(fa: &FoldAssignment) -> Vec<(Vec<usize>, Vec<usize>)> {
    let folds = fa.folds();
    (0..fa.k)
        .map(|j| {
            let train = (0..fa.n_instances()).filter(|&i| fa.fold_of[i] != j).collect();
            (train, folds[j].clone())
        })
        .collect()
}

pub(crate) fn check_folds(k: usize, n: usize) -> Result<(), SplitError> {
    if k < 2 {
        Err(SplitError::TooFewFolds(k))
    } else if k > n {
        Err(SplitError::TooManyFolds { k, n })
    } else {
        Ok(())
    }
}

/// Builds the fold assignment described by `spec`.
pub fn split(ds: &Dataset, spec: &SplitterSpec) -> Result<FoldAssignment, SplitError> {
    spec.validate()?;
    let k = spec.k_splits;
    match (spec.kind, spec.cluster_params) {
        (SplitterKind::Kfold, _) => split_kfold(ds.n_instances(), k, spec.seed),
        (SplitterKind::Scv, _) => split_scv(ds, k, spec.seed),
        (SplitterKind::Dbscv, _) => split_dbscv(ds, k, spec.seed),
        (SplitterKind::Dobscv, _) => split_dobscv(ds, k, spec.seed),
        (
            kind @ (SplitterKind::Scbcv | SplitterKind::ScbcvMini),
            Some(ClusterParams::Kmeans { k_clusters, batch_size }),
        ) => {
            let batch = kind.uses_minibatch().then_some(batch_size);
            split_scbcv(ds, k, k_clusters, spec.seed, batch)
        }
        (
            kind @ (SplitterKind::Kcbcv | SplitterKind::KcbcvMini),
            Some(ClusterParams::Kmeans { k_clusters, batch_size }),
        ) => {
            let batch = kind.uses_minibatch().then_some(batch_size);
            split_kcbcv(ds, k, k_clusters, spec.seed, batch)
        }
        (SplitterKind::Acbcv, Some(ClusterParams::Agglomerative { n_clusters, linkage })) => {
            split_acbcv(ds, k, n_clusters, linkage)
        }
        (SplitterKind::Dbscanbcv, Some(ClusterParams::Dbscan(params))) => split_dbscanbcv(ds, k, &params),
        _ => unreachable!("validate() rejects mismatched cluster parameters"),
    }
}
