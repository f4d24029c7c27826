//! Independent reference implementations used by the oracle and acceptance
//! tests. Each one follows the textbook description step by step and shares
//! nothing with the library beyond the RNG stream and K-Means fits.

#![allow(dead_code)]

use foldlab::clustering::{kmeans_fit, minibatch_kmeans_fit, KMeansConfig, NOISE};
use foldlab::seed::rng_from_seed;
use foldlab::Dataset;
use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;

pub fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Small random dataset: integer grid coordinates (to provoke distance ties)
/// or continuous ones, with every class present.
pub fn small_dataset(seed: u64, n_range: (usize, usize), max_classes: usize) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let n = rng.random_range(n_range.0..=n_range.1);
    let classes = rng.random_range(1..=max_classes.min(n));
    let d = rng.random_range(1..=3);
    let grid = rng.random_bool(0.5);
    let x = Array2::from_shape_fn((n, d), |_| {
        if grid {
            rng.random_range(0..5) as f64
        } else {
            rng.random_range(-3.0..3.0)
        }
    });
    let mut labels: Vec<usize> = (0..n).map(|i| if i < classes { i } else { rng.random_range(0..classes) }).collect();
    // shuffle so class ids are not tied to position
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    Dataset::new("oracle", x, labels, (0..classes).map(|c| format!("c{c}")).collect()).unwrap()
}

fn members_of(ds: &Dataset, class: usize) -> Vec<usize> {
    (0..ds.n_instances()).filter(|&i| ds.labels()[i] == class).collect()
}

/// Stratified cluster-based CV, step by step: per class, cluster; per
/// cluster, sort members by distance to the centroid; hand instances to
/// folds one at a time, advancing the fold pointer after every instance.
/// Returns the assignment trace `(instance, fold)` in dealing order.
pub fn scbcv_trace(ds: &Dataset, k: usize, k_clusters: usize, seed: u64, minibatch: Option<usize>) -> Vec<(usize, usize)> {
    let x = ds.features();
    let mut fold = 0;
    let mut trace = Vec::new();
    for class in 0..ds.n_classes() {
        let members = members_of(ds, class);
        let sub = x.select(ndarray::Axis(0), &members);
        let mut cfg = KMeansConfig::new(k_clusters.min(members.len()), seed);
        let fit = match minibatch {
            Some(b) => {
                cfg = cfg.minibatch(b);
                minibatch_kmeans_fit(sub.view(), &cfg).unwrap()
            }
            None => kmeans_fit(sub.view(), &cfg).unwrap(),
        };
        let centroids = fit.centroids.unwrap();
        for c in 0..fit.n_clusters {
            let mut cluster: Vec<(f64, usize)> = (0..members.len())
                .filter(|&j| fit.assignment[j] == c as isize)
                .map(|j| (sq_dist(sub.row(j), centroids.row(c)).sqrt(), members[j]))
                .collect();
            cluster.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (_, i) in cluster {
                trace.push((i, fold));
                fold = (fold + 1) % k;
            }
        }
    }
    trace
}

/// Distribution-balanced stratified CV walk: per class, start at a random
/// instance, assign it, then jump to its nearest unassigned same-class
/// neighbor; the fold pointer advances after every assignment.
pub fn dbscv_trace(ds: &Dataset, k: usize, seed: u64) -> Vec<(usize, usize)> {
    let x = ds.features();
    let mut rng = rng_from_seed(seed);
    let mut fold = 0;
    let mut trace = Vec::new();
    for class in 0..ds.n_classes() {
        let mut unassigned = members_of(ds, class);
        let mut current = unassigned[rng.random_range(0..unassigned.len())];
        loop {
            trace.push((current, fold));
            fold = (fold + 1) % k;
            unassigned.retain(|&i| i != current);
            let Some(&next) = unassigned.iter().min_by(|&&a, &&b| {
                sq_dist(x.row(current), x.row(a)).total_cmp(&sq_dist(x.row(current), x.row(b))).then(a.cmp(&b))
            }) else {
                break;
            };
            current = next;
        }
    }
    trace
}

/// Distribution-optimally balanced stratified CV: per class, while at least
/// `k` instances remain, a random remaining instance and its `k - 1` nearest
/// remaining same-class neighbors go to folds `0, 1, ..., k - 1`. The last
/// fewer-than-`k` instances are dealt in index order from one pointer shared
/// by all classes.
pub fn dobscv_trace(ds: &Dataset, k: usize, seed: u64) -> Vec<(usize, usize)> {
    let x = ds.features();
    let mut rng = rng_from_seed(seed);
    let mut leftover = 0;
    let mut trace = Vec::new();
    for class in 0..ds.n_classes() {
        let mut remaining = members_of(ds, class);
        while remaining.len() >= k {
            let anchor = remaining.remove(rng.random_range(0..remaining.len()));
            let mut near = remaining.clone();
            near.sort_by(|&a, &b| {
                sq_dist(x.row(anchor), x.row(a)).total_cmp(&sq_dist(x.row(anchor), x.row(b))).then(a.cmp(&b))
            });
            near.truncate(k - 1);
            trace.push((anchor, 0));
            for (f, &i) in near.iter().enumerate() {
                trace.push((i, f + 1));
            }
            remaining.retain(|i| !near.contains(i));
        }
        for i in remaining {
            trace.push((i, leftover));
            leftover = (leftover + 1) % k;
        }
    }
    trace
}

pub fn trace_to_folds(trace: &[(usize, usize)], n: usize) -> Vec<usize> {
    let mut fold_of = vec![usize::MAX; n];
    for &(i, f) in trace {
        assert_eq!(fold_of[i], usize::MAX, "instance {i} assigned twice");
        fold_of[i] = f;
    }
    fold_of
}

/// Minimum within-cluster sum of squares over every partition of the rows
/// into exactly `k` nonempty groups (restricted growth strings).
pub fn exhaustive_kmeans_inertia(x: ArrayView2<f64>, k: usize) -> f64 {
    let n = x.nrows();
    let mut label = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        if label.iter().max().unwrap() + 1 == k {
            let mut total = 0.0;
            for c in 0..k {
                let rows: Vec<usize> = (0..n).filter(|&i| label[i] == c).collect();
                let mean = x.select(ndarray::Axis(0), &rows).mean_axis(ndarray::Axis(0)).unwrap();
                total += rows.iter().map(|&i| sq_dist(x.row(i), mean.view())).sum::<f64>();
            }
            best = best.min(total);
        }
        // advance to the next restricted growth string
        let mut i = n - 1;
        loop {
            if i == 0 {
                return best;
            }
            let ceiling = label[..i].iter().max().unwrap() + 1;
            if label[i] < ceiling && label[i] + 1 < k {
                label[i] += 1;
                label[i + 1..].iter_mut().for_each(|l| *l = 0);
                break;
            }
            i -= 1;
        }
    }
}

/// DBSCAN by explicit density-reachability closure. Cluster ids follow the
/// lowest core index; a border point joins the lowest-id cluster with a core
/// point within `eps`.
pub fn brute_force_dbscan(x: ArrayView2<f64>, eps: f64, min_samples: usize) -> Vec<isize> {
    let n = x.nrows();
    let close = |i: usize, j: usize| sq_dist(x.row(i), x.row(j)).sqrt() <= eps;
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| close(i, j)).count() >= min_samples).collect();
    // reach[i][j]: cores i and j are density-connected
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = core[i] && core[j] && close(i, j);
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][m] && reach[m][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let mut label = vec![NOISE; n];
    let mut next = 0;
    for i in 0..n {
        if core[i] && label[i] == NOISE {
            for j in 0..n {
                if reach[i][j] {
                    label[j] = next;
                }
            }
            next += 1;
        }
    }
    for i in 0..n {
        if !core[i] {
            label[i] = (0..n)
                .filter(|&j| core[j] && close(i, j))
                .map(|j| label[j])
                .min()
                .unwrap_or(NOISE);
        }
    }
    label
}

/// Average-linkage agglomeration by recomputing every cluster pair's mean
/// distance before each merge.
pub fn naive_average_linkage(x: ArrayView2<f64>, n_clusters: usize) -> Vec<isize> {
    let n = x.nrows();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    while clusters.len() > n_clusters {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut sum = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        sum += sq_dist(x.row(i), x.row(j)).sqrt();
                    }
                }
                let avg = sum / (clusters[a].len() * clusters[b].len()) as f64;
                if avg < best.0 {
                    best = (avg, a, b);
                }
            }
        }
        let merged = clusters.remove(best.2);
        clusters[best.1].extend(merged);
    }
    let mut label = vec![0isize; n];
    for (c, members) in clusters.iter().enumerate() {
        for &i in members {
            label[i] = c as isize;
        }
    }
    label
}

pub fn same_partition(a: &[isize], b: &[isize]) -> bool {
    a.len() == b.len() && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}
