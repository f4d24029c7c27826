//! Clustering kernels used by the cluster-based splitters, plus the procedures
//! that pick their hyperparameters from data.
//!
//! All distances are Euclidean. Every fitting function is a pure function of
//! its inputs and seed.

mod agglomerative;
mod dbscan;
mod estimate;
mod kmeans;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::euclidean;

pub use agglomerative::{agglomerative_fit, merge_heights, Linkage};
pub use dbscan::dbscan_fit;
pub use estimate::{
    estimate_cluster_count, estimate_dbscan_params, k_distances, knee_index, ClusterCountParams,
};
pub use kmeans::{kmeans_fit, kmeans_fit_traced, minibatch_kmeans_fit};

/// Assignment value for DBSCAN noise points.
pub const NOISE: isize = -1;

/// Default number of k-means++ starts for Lloyd's algorithm.
pub const DEFAULT_N_INIT: usize = 10;

/// Default Mini-Batch K-Means batch size.
pub const DEFAULT_BATCH_SIZE: usize = 1024;

#[derive(Debug, Error, PartialEq)]
pub enum ClusteringError {
    #[error("cannot cluster an empty matrix")]
    Empty,
    #[error("requested {k} clusters from {n} instances")]
    TooManyClusters { k: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{n} instances are too few for {needed}")]
    TooFewInstances { n: usize, needed: String },
}

/// Cluster id per instance plus optional centroid geometry.
///
/// Non-noise ids are contiguous in `[0, n_clusters)`. When `centroids` is
/// present, `distances[i]` is the distance from instance `i` to its centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub assignment: Vec<isize>,
    pub n_clusters: usize,
    pub centroids: Option<Array2<f64>>,
    pub distances: Option<Vec<f64>>,
}

impl ClusteringResult {
    pub fn n_noise(&self) -> usize {
        self.assignment.iter().filter(|&&a| a == NOISE).count()
    }

    /// Members of each cluster (ascending), followed by nothing for noise.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (i, &a) in self.assignment.iter().enumerate() {
            if a != NOISE {
                out[a as usize].push(i);
            }
        }
        out
    }

    /// Sum of squared distances to the centroids, when centroids exist.
    pub fn inertia(&self) -> Option<f64> {
        self.distances
            .as_ref()
            .filter(|_| self.centroids.is_some())
            .map(|d| d.iter().map(|v| v * v).sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    pub epsilon: f64,
    pub min_samples: usize,
}

impl DbscanParams {
    pub fn validate(&self) -> Result<(), ClusteringError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(ClusteringError::InvalidParameter(format!(
                "epsilon must be finite and positive, got {}",
                self.epsilon
            )));
        }
        if self.min_samples == 0 {
            return Err(ClusteringError::InvalidParameter(
                "min_samples must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iterations: usize,
    /// Lloyd stops once the fraction of reassigned points drops below this;
    /// Mini-Batch stops once no center moves farther than this.
    pub tolerance: f64,
    pub seed: u64,
    /// Independent starts for Lloyd's algorithm; Mini-Batch uses one.
    pub n_init: usize,
    pub minibatch: bool,
    pub batch_size: usize,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            max_iterations: 300,
            tolerance: 1e-4,
            seed,
            n_init: DEFAULT_N_INIT,
            minibatch: false,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }

    pub fn n_init(mut self, n_init: usize) -> Self {
        self.n_init = n_init;
        self
    }

    pub fn minibatch(mut self, batch_size: usize) -> Self {
        self.minibatch = true;
        self.batch_size = batch_size;
        self
    }
}

/// Dispatches to [`kmeans_fit`] or [`minibatch_kmeans_fit`] on `cfg.minibatch`.
pub fn fit_kmeans_variant(
    x: ArrayView2<f64>,
    cfg: &KMeansConfig,
) -> Result<ClusteringResult, ClusteringError> {
    if cfg.minibatch {
        minibatch_kmeans_fit(x, cfg)
    } else {
        kmeans_fit(x, cfg)
    }
}

/// Distance of each instance to the mean of its own cluster; noise gets 0.
pub fn distances_to_cluster_means(x: ArrayView2<f64>, assignment: &[isize], n_clusters: usize) -> Vec<f64> {
    let d = x.ncols();
    let mut sums = Array2::<f64>::zeros((n_clusters, d));
    let mut counts = vec![0usize; n_clusters];
    for (i, &a) in assignment.iter().enumerate() {
        if a != NOISE {
            let a = a as usize;
            counts[a] += 1;
            let mut row = sums.row_mut(a);
            row += &x.row(i);
        }
    }
    for (mut row, &c) in sums.rows_mut().into_iter().zip(&counts) {
        if c > 0 {
            row /= c as f64;
        }
    }
    assignment
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            if a == NOISE {
                0.0
            } else {
                euclidean(x.row(i), sums.row(a as usize))
            }
        })
        .collect()
}

/// Renumbers non-noise labels so clusters are numbered by their lowest member.
pub(crate) fn relabel_by_first_member(raw: &[isize]) -> (Vec<isize>, usize) {
    let mut map = std::collections::HashMap::new();
    let mut out = Vec::with_capacity(raw.len());
    for &r in raw {
        if r == NOISE {
            out.push(NOISE);
        } else {
            let next = map.len() as isize;
            out.push(*map.entry(r).or_insert(next));
        }
    }
    (out, map.len())
}

fn check_matrix(x: ArrayView2<f64>) -> Result<(), ClusteringError> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(ClusteringError::Empty);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ClusteringError::InvalidParameter("non-finite input".into()));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod test_util {
    use ndarray::Array2;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    use crate::seed::rng_from_seed;

    /// Gaussian blobs with the given centers; returns points and true blob id.
    pub fn blobs(centers: &[(f64, f64)], per_blob: usize, spread: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = rng_from_seed(seed);
        let normal = Normal::new(0.0, spread).unwrap();
        let n = centers.len() * per_blob;
        let mut x = Array2::zeros((n, 2));
        let mut truth = Vec::with_capacity(n);
        for (b, &(cx, cy)) in centers.iter().enumerate() {
            for j in 0..per_blob {
                let i = b * per_blob + j;
                x[[i, 0]] = cx + normal.sample(&mut rng);
                x[[i, 1]] = cy + normal.sample(&mut rng);
                truth.push(b);
            }
        }
        (x, truth)
    }

    pub fn uniform_points(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng_from_seed(seed);
        Array2::from_shape_fn((n, d), |_| rng.random_range(0.0..10.0))
    }

    /// Whether two labelings induce the same partition.
    pub fn same_partition(a: &[isize], b: &[isize]) -> bool {
        a.len() == b.len()
            && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn relabel_orders_by_first_member() {
        let (labels, n) = relabel_by_first_member(&[5, NOISE, 2, 5, 2, 9]);
        assert_eq!(labels, vec![0, NOISE, 1, 0, 1, 2]);
        assert_eq!(n, 3);
    }

    #[test]
    fn cluster_mean_distances() {
        let x = array![[0.0, 0.0], [2.0, 0.0], [10.0, 10.0]];
        let d = distances_to_cluster_means(x.view(), &[0, 0, NOISE], 1);
        assert_eq!(d, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn dbscan_params_validation() {
        assert!(DbscanParams { epsilon: 0.0, min_samples: 3 }.validate().is_err());
        assert!(DbscanParams { epsilon: f64::NAN, min_samples: 3 }.validate().is_err());
        assert!(DbscanParams { epsilon: 1.0, min_samples: 0 }.validate().is_err());
        assert!(DbscanParams { epsilon: 1.0, min_samples: 1 }.validate().is_ok());
    }
}
