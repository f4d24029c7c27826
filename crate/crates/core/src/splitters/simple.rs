use rand::seq::SliceRandom;

use super::{check_folds, FoldAssignment, SplitError};
use crate::data::Dataset;
use crate::seed::rng_from_seed;

/// Random permutation chopped into `k` contiguous blocks; the first `n % k`
/// blocks get one extra instance.
pub fn split_kfold(n: usize, k: usize, seed: u64) -> Result<FoldAssignment, SplitError> {
    check_folds(k, n)?;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let (base, extra) = (n / k, n % k);
    let mut fold_of = vec![0; n];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &i in &perm[pos..pos + size] {
            fold_of[i] = fold;
        }
        pos += size;
    }
    Ok(FoldAssignment { k, fold_of })
}

/// Classes in id order, each shuffled, concatenated and dealt round-robin.
pub fn split_scv(ds: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment, SplitError> {
    check_folds(k, ds.n_instances())?;
    let mut rng = rng_from_seed(seed);
    let mut order = Vec::with_capacity(ds.n_instances());
    for mut members in ds.class_members() {
        members.shuffle(&mut rng);
        order.extend(members);
    }
    Ok(FoldAssignment::round_robin(&order, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitters::test_util::random_dataset;
    use ndarray::Array2;
    use proptest::prelude::*;

    fn labelled(labels: Vec<usize>) -> Dataset {
        let n = labels.len();
        let k = labels.iter().max().unwrap() + 1;
        let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        Dataset::new("t", x, labels, (0..k).map(|c| c.to_string()).collect()).unwrap()
    }

    #[test]
    fn kfold_sizes() {
        assert_eq!(split_kfold(10, 5, 1).unwrap().fold_sizes(), vec![2; 5]);
        let mut sizes = split_kfold(7, 2, 1).unwrap().fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 4]);
    }

    #[test]
    fn kfold_deterministic_and_seed_sensitive() {
        assert_eq!(split_kfold(50, 5, 9).unwrap(), split_kfold(50, 5, 9).unwrap());
        assert_ne!(split_kfold(50, 5, 9).unwrap(), split_kfold(50, 5, 10).unwrap());
    }

    #[test]
    fn kfold_rejects_too_many_folds() {
        assert_eq!(split_kfold(3, 4, 0), Err(SplitError::TooManyFolds { k: 4, n: 3 }));
    }

    #[test]
    fn scv_exact_stratification() {
        let ds = labelled(vec![0, 0, 0, 0, 1, 1]);
        let fa = split_scv(&ds, 2, 3).unwrap();
        assert_eq!(fa.class_counts(ds.labels(), 2), vec![vec![2, 1], vec![2, 1]]);
    }

    #[test]
    fn scv_singleton_class_lands_in_one_fold() {
        let ds = labelled(vec![0, 0, 0, 1, 0]);
        let fa = split_scv(&ds, 2, 0).unwrap();
        let counts = fa.class_counts(ds.labels(), 2);
        assert_eq!(counts.iter().map(|c| c[1]).sum::<usize>(), 1);
        assert_eq!(counts.iter().filter(|c| c[1] == 1).count(), 1);
    }

    proptest! {
        #[test]
        fn scv_per_class_counts_within_one(
            n in 6usize..120, classes in 2usize..5, k in 2usize..6, seed in any::<u64>()
        ) {
            prop_assume!(n >= k.max(classes));
            let ds = random_dataset(n, classes, 2, seed);
            let fa = split_scv(&ds, k, seed).unwrap();
            prop_assert!(fa.is_valid_partition());
            let counts = fa.class_counts(ds.labels(), classes);
            for c in 0..classes {
                let col: Vec<usize> = counts.iter().map(|f| f[c]).collect();
                prop_assert!(col.iter().max().unwrap() - col.iter().min().unwrap() <= 1);
            }
        }

        #[test]
        fn kfold_sizes_within_one(n in 2usize..300, k in 2usize..12, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let sizes = split_kfold(n, k, seed).unwrap().fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        }
    }
}
