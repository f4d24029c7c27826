use ndarray::{ArrayView2, Axis};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{merge_heights, ClusteringError, DbscanParams, Linkage};
use crate::distance::euclidean;
use crate::seed::rng_from_seed;

/// Knobs of the repeated-sample dendrogram-gap cluster count estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterCountParams {
    pub repetitions: usize,
    pub sample_size: usize,
    /// A merge whose height exceeds the next lower merge by more than this
    /// factor marks the cut.
    pub ratio_threshold: f64,
    pub min_clusters: usize,
    pub max_clusters: usize,
    pub linkage: Linkage,
}

impl Default for ClusterCountParams {
    fn default() -> Self {
        Self {
            repetitions: 10,
            sample_size: 100,
            ratio_threshold: 1.5,
            min_clusters: 2,
            max_clusters: 7,
            linkage: Linkage::Average,
        }
    }
}

/// Cluster count suggested by one dendrogram: scanning from the root down,
/// the first level whose merge height jumps by more than the threshold over
/// the next lower merge. Only cuts up to `max_clusters` are considered; no
/// jump means one cluster.
fn candidate_from_heights(heights: &[f64], params: &ClusterCountParams) -> usize {
    let m = heights.len();
    // top[c - 1] is the merge taking c + 1 clusters down to c
    let top = |c: usize| heights[m - c];
    for clusters in 1..params.max_clusters.min(m) {
        let (upper, lower) = (top(clusters), top(clusters + 1));
        let jump = if lower > 0.0 {
            upper / lower > params.ratio_threshold
        } else {
            upper > 0.0
        };
        if jump {
            return clusters + 1;
        }
    }
    1
}

/// Median (lower middle) of per-sample dendrogram cut candidates, clamped to
/// `[min_clusters, max_clusters]`.
pub fn estimate_cluster_count(
    x: ArrayView2<f64>,
    seed: u64,
    params: &ClusterCountParams,
) -> Result<usize, ClusteringError> {
    let n = x.nrows();
    if n < 10 {
        return Err(ClusteringError::TooFewInstances {
            n,
            needed: "cluster count estimation (at least 10)".into(),
        });
    }
    if params.repetitions == 0 || params.sample_size < 3 || params.min_clusters > params.max_clusters {
        return Err(ClusteringError::InvalidParameter(format!("{params:?}")));
    }
    let mut rng = rng_from_seed(seed);
    let size = params.sample_size.min(n);
    let mut candidates: Vec<usize> = (0..params.repetitions)
        .map(|_| {
            let mut picks = index::sample(&mut rng, n, size).into_vec();
            picks.sort_unstable();
            let sample = x.select(Axis(0), &picks);
            let heights = merge_heights(sample.view(), params.linkage);
            candidate_from_heights(&heights, params)
        })
        .collect();
    candidates.sort_unstable();
    let median = candidates[(candidates.len() - 1) / 2];
    Ok(median.clamp(params.min_clusters, params.max_clusters))
}

/// Distance from every point to its `order`-th nearest other point.
pub fn k_distances(x: ArrayView2<f64>, order: usize) -> Vec<f64> {
    let n = x.nrows();
    (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| euclidean(x.row(i), x.row(j)))
                .collect();
            let (_, kth, _) = d.select_nth_unstable_by(order - 1, |a, b| a.total_cmp(b));
            *kth
        })
        .collect()
}

/// Index of the point farthest from the chord joining the curve's endpoints.
/// `None` when the curve is too short, flat, linear, or peaks at an endpoint.
pub fn knee_index(curve: &[f64]) -> Option<usize> {
    let m = curve.len();
    if m < 3 {
        return None;
    }
    let (y0, y1) = (curve[0], curve[m - 1]);
    let span = (m - 1) as f64;
    // perpendicular distance up to a constant factor
    let offset = |i: usize| ((y1 - y0) * i as f64 - span * (curve[i] - y0)).abs();
    let (best, best_off) = (0..m)
        .map(|i| (i, offset(i)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let scale = span * curve.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    if best_off <= 1e-12 * scale || best == 0 || best == m - 1 {
        None
    } else {
        Some(best)
    }
}

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

/// `min_samples = 2 * n_features`; epsilon at the knee of the descending
/// `(min_samples - 1)`-nearest-neighbor distance curve, or the median
/// k-distance when no interior knee exists.
pub fn estimate_dbscan_params(x: ArrayView2<f64>) -> Result<DbscanParams, ClusteringError> {
    let (n, d) = x.dim();
    if d == 0 {
        return Err(ClusteringError::Empty);
    }
    let min_samples = 2 * d;
    if n <= min_samples {
        return Err(ClusteringError::TooFewInstances {
            n,
            needed: format!("a {}-nearest-neighbor distance curve (need more than {min_samples})", min_samples - 1),
        });
    }
    let mut curve = k_distances(x, min_samples - 1);
    curve.sort_by(|a, b| b.total_cmp(a));
    let mut epsilon = match knee_index(&curve) {
        Some(i) => curve[i],
        None => {
            let mut asc = curve.clone();
            asc.reverse();
            median(&asc)
        }
    };
    if epsilon <= 0.0 {
        epsilon = curve
            .iter()
            .copied()
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min);
        if !epsilon.is_finite() {
            epsilon = f64::EPSILON;
        }
    }
    Ok(DbscanParams { epsilon, min_samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::test_util::{blobs, uniform_points};
    use ndarray::Array2;

    #[test]
    fn knee_on_sharp_drop() {
        let curve = [10.0, 9.0, 8.0, 7.0, 3.0, 2.9, 2.8, 2.7, 2.6, 2.5];
        // chord y = 10 - (7.5 / 9) i; vertical gaps 0, .17, .33, .5, 3.67, 2.93, ...
        assert_eq!(knee_index(&curve), Some(4));
    }

    #[test]
    fn linear_and_flat_curves_have_no_knee() {
        let linear: Vec<f64> = (0..20).map(|i| 20.0 - i as f64).collect();
        assert_eq!(knee_index(&linear), None);
        assert_eq!(knee_index(&[2.0; 8]), None);
        assert_eq!(knee_index(&[3.0, 1.0]), None);
    }

    #[test]
    fn flat_curve_falls_back_to_median() {
        // evenly spaced points on a line: every nearest-neighbor distance is 1
        let line = Array2::from_shape_fn((9, 1), |(i, _)| i as f64);
        let params = estimate_dbscan_params(line.view()).unwrap();
        assert_eq!(params.min_samples, 2);
        assert_eq!(params.epsilon, 1.0);
    }

    #[test]
    fn min_samples_is_twice_the_columns() {
        let x = uniform_points(40, 7, 3);
        assert_eq!(estimate_dbscan_params(x.view()).unwrap().min_samples, 14);
        let small = uniform_points(14, 7, 3);
        assert!(matches!(
            estimate_dbscan_params(small.view()),
            Err(ClusteringError::TooFewInstances { n: 14, .. })
        ));
    }

    #[test]
    fn k_distance_excludes_self() {
        let x = Array2::from_shape_vec((4, 1), vec![0.0, 1.0, 3.0, 7.0]).unwrap();
        assert_eq!(k_distances(x.view(), 1), vec![1.0, 1.0, 2.0, 4.0]);
        assert_eq!(k_distances(x.view(), 2), vec![3.0, 2.0, 3.0, 6.0]);
    }

    #[test]
    fn four_blobs_give_four() {
        let centers = [(0.0, 0.0), (20.0, 0.0), (0.0, 20.0), (20.0, 20.0)];
        for seed in 0..5 {
            let (x, _) = blobs(&centers, 60, 1.0, seed);
            assert_eq!(estimate_cluster_count(x.view(), seed, &ClusterCountParams::default()).unwrap(), 4);
        }
    }

    #[test]
    fn single_blob_clamps_to_floor() {
        for seed in 0..5 {
            let (x, _) = blobs(&[(0.0, 0.0)], 200, 1.0, seed);
            assert_eq!(estimate_cluster_count(x.view(), seed, &ClusterCountParams::default()).unwrap(), 2);
        }
    }

    #[test]
    fn count_is_deterministic_and_needs_ten_points() {
        let x = uniform_points(150, 3, 4);
        let p = ClusterCountParams::default();
        assert_eq!(estimate_cluster_count(x.view(), 9, &p), estimate_cluster_count(x.view(), 9, &p));
        let tiny = uniform_points(9, 3, 4);
        assert!(estimate_cluster_count(tiny.view(), 9, &p).is_err());
    }

    #[test]
    fn candidate_scan_reads_from_the_top() {
        let p = ClusterCountParams::default();
        // merges ascending; the big jump sits between the 3rd and 4th from the top
        let heights = [0.1, 0.12, 0.15, 0.2, 0.22, 0.25, 5.0, 5.2, 6.0];
        assert_eq!(candidate_from_heights(&heights, &p), 4);
        let smooth = [1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6];
        assert_eq!(candidate_from_heights(&smooth, &p), 1);
    }
}
