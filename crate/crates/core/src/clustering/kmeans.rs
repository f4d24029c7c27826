use ndarray::{Array2, ArrayView2};
use rand::seq::index;
use rand::Rng;

use super::{check_matrix, ClusteringError, ClusteringResult, KMeansConfig};
use crate::distance::sq_euclidean;
use crate::seed::{mix_seed, rng_from_seed, SeededRng};

fn check(x: ArrayView2<f64>, cfg: &KMeansConfig) -> Result<(), ClusteringError> {
    check_matrix(x)?;
    if cfg.k == 0 {
        return Err(ClusteringError::InvalidParameter("k must be at least 1".into()));
    }
    if cfg.k > x.nrows() {
        return Err(ClusteringError::TooManyClusters {
            k: cfg.k,
            n: x.nrows(),
        });
    }
    if cfg.n_init == 0 {
        return Err(ClusteringError::InvalidParameter("n_init must be at least 1".into()));
    }
    if cfg.max_iterations == 0 {
        return Err(ClusteringError::InvalidParameter(
            "max_iterations must be positive".into(),
        ));
    }
    if cfg.minibatch && cfg.batch_size == 0 {
        return Err(ClusteringError::InvalidParameter(
            "batch_size must be positive".into(),
        ));
    }
    Ok(())
}

/// k-means++ seeding: first center uniform, then D²-weighted draws. Once every
/// point coincides with a center, remaining centers are drawn uniformly from
/// the points not yet chosen.
fn plus_plus_init(x: ArrayView2<f64>, k: usize, rng: &mut SeededRng) -> Array2<f64> {
    let n = x.nrows();
    let mut chosen = Vec::with_capacity(k);
    let first = rng.random_range(0..n);
    chosen.push(first);
    let mut d2: Vec<f64> = (0..n).map(|i| sq_euclidean(x.row(i), x.row(first))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total weight has a positive entry")
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, w) in d2.iter_mut().enumerate() {
            *w = w.min(sq_euclidean(x.row(i), x.row(next)));
        }
    }
    x.select(ndarray::Axis(0), &chosen)
}

/// Nearest center per point (ties to the lower center id) and squared distance.
fn assign(x: ArrayView2<f64>, centers: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    let mut labels = Vec::with_capacity(x.nrows());
    let mut d2 = Vec::with_capacity(x.nrows());
    for row in x.rows() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, center) in centers.rows().into_iter().enumerate() {
            let d = sq_euclidean(row, center);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels.push(best);
        d2.push(best_d);
    }
    (labels, d2)
}

fn cluster_means(x: ArrayView2<f64>, labels: &[usize], k: usize) -> (Array2<f64>, Vec<usize>) {
    let mut sums = Array2::<f64>::zeros((k, x.ncols()));
    let mut counts = vec![0usize; k];
    for (row, &l) in x.rows().into_iter().zip(labels) {
        counts[l] += 1;
        let mut s = sums.row_mut(l);
        s += &row;
    }
    for (mut s, &c) in sums.rows_mut().into_iter().zip(&counts) {
        if c > 0 {
            s /= c as f64;
        }
    }
    (sums, counts)
}

/// Gives every empty cluster the point farthest from its own center, taken
/// from a cluster that can spare one; the empty cluster's center moves onto it.
fn repair_empty(x: ArrayView2<f64>, labels: &mut [usize], centers: &mut Array2<f64>, counts: &mut [usize]) {
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let donor_point = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| {
                let da = sq_euclidean(x.row(a), centers.row(labels[a]));
                let db = sq_euclidean(x.row(b), centers.row(labels[b]));
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("k <= n guarantees a cluster with a spare member");
        counts[labels[donor_point]] -= 1;
        labels[donor_point] = empty;
        counts[empty] = 1;
        centers.row_mut(empty).assign(&x.row(donor_point));
    }
}

fn finish(x: ArrayView2<f64>, labels: Vec<usize>, centers: Array2<f64>) -> ClusteringResult {
    let distances = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_euclidean(x.row(i), centers.row(l)).sqrt())
        .collect();
    ClusteringResult {
        assignment: labels.iter().map(|&l| l as isize).collect(),
        n_clusters: centers.nrows(),
        centroids: Some(centers),
        distances: Some(distances),
    }
}

/// Lloyd's algorithm, best of `cfg.n_init` seeded k-means++ starts.
///
/// Each start iterates until the fraction of reassigned points falls below
/// `cfg.tolerance` (or nothing moves), or `cfg.max_iterations` is reached.
/// The start with the lowest inertia wins, the earliest on ties. Start 0 uses
/// `cfg.seed`; start `r` uses `mix_seed(cfg.seed, r)`.
pub fn kmeans_fit(x: ArrayView2<f64>, cfg: &KMeansConfig) -> Result<ClusteringResult, ClusteringError> {
    check(x, cfg)?;
    let mut best: Option<(f64, ClusteringResult)> = None;
    for r in 0..cfg.n_init {
        let seed = if r == 0 { cfg.seed } else { mix_seed(cfg.seed, r as u64) };
        let fit = lloyd(x, cfg, seed, &mut |iteration, inertia| {
            log::trace!("kmeans start {r} iteration {iteration}: inertia {inertia}");
        });
        let inertia = fit.inertia().expect("centroids present");
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, fit));
        }
    }
    Ok(best.expect("n_init checked").1)
}

/// A single Lloyd run from `cfg.seed`, reporting `(iteration, inertia)` after
/// every assignment step.
pub fn kmeans_fit_traced(
    x: ArrayView2<f64>,
    cfg: &KMeansConfig,
    trace: &mut dyn FnMut(usize, f64),
) -> Result<ClusteringResult, ClusteringError> {
    check(x, cfg)?;
    Ok(lloyd(x, cfg, cfg.seed, trace))
}

fn lloyd(x: ArrayView2<f64>, cfg: &KMeansConfig, seed: u64, trace: &mut dyn FnMut(usize, f64)) -> ClusteringResult {
    let n = x.nrows();
    let mut rng = rng_from_seed(seed);
    let mut centers = plus_plus_init(x, cfg.k, &mut rng);
    let (mut labels, d2) = assign(x, &centers);
    trace(0, d2.iter().sum());

    for iteration in 1..=cfg.max_iterations {
        let (means, mut counts) = cluster_means(x, &labels, cfg.k);
        // empty clusters keep their previous center until repaired
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                centers.row_mut(c).assign(&means.row(c));
            }
        }
        repair_empty(x, &mut labels, &mut centers, &mut counts);
        let (next, d2) = assign(x, &centers);
        let changed = next.iter().zip(&labels).filter(|(a, b)| a != b).count();
        labels = next;
        trace(iteration, d2.iter().sum());
        if changed == 0 || (changed as f64 / n as f64) < cfg.tolerance {
            break;
        }
    }
    let mut counts = vec![0usize; cfg.k];
    for &l in &labels {
        counts[l] += 1;
    }
    repair_empty(x, &mut labels, &mut centers, &mut counts);
    finish(x, labels, centers)
}

/// Mini-Batch K-Means with per-center learning rate `1 / count`.
///
/// Each iteration draws `min(batch_size, n)` distinct points (the whole data,
/// in index order, when the batch covers it), assigns them against the
/// current centers, then folds them into their centers one by one. Stops when
/// no center moves more than `cfg.tolerance` or after `cfg.max_iterations`.
/// A final pass assigns every point.
pub fn minibatch_kmeans_fit(x: ArrayView2<f64>, cfg: &KMeansConfig) -> Result<ClusteringResult, ClusteringError> {
    check(x, cfg)?;
    let n = x.nrows();
    let mut rng = rng_from_seed(cfg.seed);
    let mut centers = plus_plus_init(x, cfg.k, &mut rng);
    let mut seen = vec![0usize; cfg.k];
    let batch_len = cfg.batch_size.min(n);

    for iteration in 0..cfg.max_iterations {
        let batch: Vec<usize> = if batch_len == n {
            (0..n).collect()
        } else {
            index::sample(&mut rng, n, batch_len).into_vec()
        };
        let batch_view = x.select(ndarray::Axis(0), &batch);
        let (labels, _) = assign(batch_view.view(), &centers);
        let before = centers.clone();
        for (&i, &c) in batch.iter().zip(&labels) {
            seen[c] += 1;
            let eta = 1.0 / seen[c] as f64;
            let mut center = centers.row_mut(c);
            center.zip_mut_with(&x.row(i), |m, &v| *m += eta * (v - *m));
        }
        let shift = before
            .rows()
            .into_iter()
            .zip(centers.rows())
            .map(|(a, b)| sq_euclidean(a, b).sqrt())
            .fold(0.0, f64::max);
        log::trace!("minibatch iteration {iteration}: max center shift {shift}");
        if shift < cfg.tolerance {
            break;
        }
    }
    let (mut labels, _) = assign(x, &centers);
    let mut counts = vec![0usize; cfg.k];
    for &l in &labels {
        counts[l] += 1;
    }
    repair_empty(x, &mut labels, &mut centers, &mut counts);
    Ok(finish(x, labels, centers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::test_util::{blobs, same_partition, uniform_points};
    use ndarray::array;

    #[test]
    fn two_symmetric_blobs() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]];
        let r = kmeans_fit(x.view(), &KMeansConfig::new(2, 1)).unwrap();
        let c = r.centroids.unwrap();
        let mut rows: Vec<(f64, f64)> = c.rows().into_iter().map(|r| (r[0], r[1])).collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(rows, vec![(0.0, 0.5), (10.0, 0.5)]);
    }

    #[test]
    fn k_equals_n_is_exact() {
        let x = uniform_points(9, 3, 4);
        let r = kmeans_fit(x.view(), &KMeansConfig::new(9, 2)).unwrap();
        assert!(r.inertia().unwrap() < 1e-24);
        let mut ids = r.assignment.clone();
        ids.sort_unstable();
        assert_eq!(ids, (0..9).collect::<Vec<isize>>());
    }

    #[test]
    fn k_one_gives_column_means() {
        let x = uniform_points(30, 4, 8);
        let r = kmeans_fit(x.view(), &KMeansConfig::new(1, 0)).unwrap();
        let means = x.mean_axis(ndarray::Axis(0)).unwrap();
        for (a, b) in r.centroids.unwrap().row(0).iter().zip(means.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn errors() {
        let x = uniform_points(3, 2, 0);
        assert_eq!(
            kmeans_fit(x.view(), &KMeansConfig::new(4, 0)).unwrap_err(),
            ClusteringError::TooManyClusters { k: 4, n: 3 }
        );
        let empty = Array2::<f64>::zeros((0, 2));
        assert_eq!(kmeans_fit(empty.view(), &KMeansConfig::new(1, 0)).unwrap_err(), ClusteringError::Empty);
    }

    #[test]
    fn inertia_trace_is_non_increasing() {
        for seed in 0..20 {
            let x = uniform_points(60, 3, seed);
            let mut trace = Vec::new();
            kmeans_fit_traced(x.view(), &KMeansConfig::new(5, seed), &mut |_, v| trace.push(v)).unwrap();
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "seed {seed}: {trace:?}");
            }
        }
    }

    #[test]
    fn distances_match_centroids() {
        let x = uniform_points(40, 2, 3);
        for r in [
            kmeans_fit(x.view(), &KMeansConfig::new(4, 3)).unwrap(),
            minibatch_kmeans_fit(x.view(), &KMeansConfig::new(4, 3).minibatch(8)).unwrap(),
        ] {
            let c = r.centroids.as_ref().unwrap();
            for (i, &d) in r.distances.as_ref().unwrap().iter().enumerate() {
                let expect = sq_euclidean(x.row(i), c.row(r.assignment[i] as usize)).sqrt();
                assert!((d - expect).abs() < 1e-9);
            }
            let mut ids = r.assignment.clone();
            ids.sort_unstable();
            ids.dedup();
            assert_eq!(ids, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let x = array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [2.0, 2.0]];
        let r = kmeans_fit(x.view(), &KMeansConfig::new(3, 5)).unwrap();
        assert_eq!(r.n_clusters, 3);
        for c in 0..3 {
            assert!(r.assignment.contains(&c));
        }
    }

    #[test]
    fn minibatch_matches_lloyd_on_separated_blobs() {
        for seed in 0..10 {
            let (x, truth) = blobs(&[(0.0, 0.0), (50.0, 50.0)], 30, 1.0, seed);
            let full = kmeans_fit(x.view(), &KMeansConfig::new(2, seed)).unwrap();
            let mini = minibatch_kmeans_fit(x.view(), &KMeansConfig::new(2, seed).minibatch(16)).unwrap();
            let truth: Vec<isize> = truth.iter().map(|&t| t as isize).collect();
            assert!(same_partition(&full.assignment, &truth));
            assert!(same_partition(&mini.assignment, &full.assignment));
        }
    }

    #[test]
    fn minibatch_is_deterministic() {
        let x = uniform_points(200, 3, 1);
        let cfg = KMeansConfig::new(4, 77).minibatch(32);
        let a = minibatch_kmeans_fit(x.view(), &cfg).unwrap();
        let b = minibatch_kmeans_fit(x.view(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn minibatch_full_batch_reaches_lloyd_centroids() {
        let (x, _) = blobs(&[(0.0, 0.0), (20.0, 0.0), (0.0, 20.0)], 15, 1.0, 9);
        let full = kmeans_fit(x.view(), &KMeansConfig::new(3, 9)).unwrap();
        let mini = minibatch_kmeans_fit(x.view(), &KMeansConfig::new(3, 9).minibatch(1024)).unwrap();
        assert!(same_partition(&full.assignment, &mini.assignment));
        assert!((full.inertia().unwrap() - mini.inertia().unwrap()).abs() < 1e-6);
    }
}
