use rand::Rng;

use super::{check_folds, FoldAssignment, SplitError};
use crate::data::Dataset;
use crate::distance::euclidean;
use crate::seed::rng_from_seed;

/// Distribution-balanced stratified CV.
///
/// Per class (in id order), a walk starts at a random member and repeatedly
/// moves to the nearest unvisited member of the same class, assigning folds
/// cyclically. The fold counter carries over from one class to the next, so
/// the first class starts at fold 0 and every fold receives instances even
/// when classes are small.
pub fn split_dbscv(ds: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment, SplitError> {
    check_folds(k, ds.n_instances())?;
    let x = ds.features();
    let mut rng = rng_from_seed(seed);
    let mut fold_of = vec![0; ds.n_instances()];
    let mut next_fold = 0;
    for members in ds.class_members() {
        let start = rng.random_range(0..members.len());
        let mut visited = vec![false; members.len()];
        let mut current = start;
        for _ in 0..members.len() {
            visited[current] = true;
            fold_of[members[current]] = next_fold;
            next_fold = (next_fold + 1) % k;
            let here = x.row(members[current]);
            let nearest = (0..members.len())
                .filter(|&j| !visited[j])
                .map(|j| (euclidean(here, x.row(members[j])), j))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            match nearest {
                Some((_, j)) => current = j,
                None => break,
            }
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

/// Distribution-optimally balanced stratified CV.
///
/// Per class (in id order), while at least `k` members are unassigned: pick a
/// random unassigned member, put it in fold 0 and its `k - 1` nearest
/// unassigned neighbors in folds `1..k` by ascending distance (ties by index).
/// Leftovers (fewer than `k`) are dealt round-robin in index order, with one
/// counter shared by all classes and starting at fold 0.
pub fn split_dobscv(ds: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment, SplitError> {
    check_folds(k, ds.n_instances())?;
    let x = ds.features();
    let mut rng = rng_from_seed(seed);
    let mut fold_of = vec![0; ds.n_instances()];
    let mut leftover_fold = 0;
    for members in ds.class_members() {
        // `pool` holds unassigned instance ids, ascending.
        let mut pool = members;
        while pool.len() >= k {
            let anchor = pool.remove(rng.random_range(0..pool.len()));
            let here = x.row(anchor);
            let mut by_distance: Vec<(f64, usize)> = pool
                .iter()
                .map(|&j| (euclidean(here, x.row(j)), j))
                .collect();
            by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            fold_of[anchor] = 0;
            for (fold, &(_, j)) in by_distance.iter().take(k - 1).enumerate() {
                fold_of[j] = fold + 1;
            }
            let taken: Vec<usize> = by_distance[..k - 1].iter().map(|&(_, j)| j).collect();
            pool.retain(|j| !taken.contains(j));
        }
        for i in pool {
            fold_of[i] = leftover_fold;
            leftover_fold = (leftover_fold + 1) % k;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}
