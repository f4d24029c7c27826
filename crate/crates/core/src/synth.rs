//! Seeded synthetic classification datasets.
//!
//! Each class is a mixture of Gaussian blobs with unit spread around centers
//! drawn from `N(0, separation²)`. Class sizes follow `class_weights` by
//! largest remainder, and a fraction of labels can be flipped to another
//! class so that no learner is perfect.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{DataError, Dataset};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub name: String,
    pub n_instances: usize,
    pub n_features: usize,
    /// Relative class sizes; normalized internally.
    pub class_weights: Vec<f64>,
    pub clusters_per_class: usize,
    pub separation: f64,
    pub label_noise: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Two equal classes, two blobs each.
    pub fn balanced(name: &str, n_instances: usize, n_features: usize, seed: u64) -> Self {
        Self {
            name: name.to_string(),
            n_instances,
            n_features,
            class_weights: vec![1.0, 1.0],
            clusters_per_class: 2,
            separation: 2.0,
            label_noise: 0.05,
            seed,
        }
    }

    /// Binary 85/15 split (imbalance index 0.49), two blobs per class.
    pub fn imbalanced(name: &str, n_instances: usize, n_features: usize, seed: u64) -> Self {
        Self {
            class_weights: vec![0.85, 0.15],
            ..Self::balanced(name, n_instances, n_features, seed)
        }
    }
}

/// Per-class sizes by largest remainder, each at least 2.
fn class_sizes(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let missing = n - sizes.iter().sum::<usize>();
    for &c in order.iter().take(missing) {
        sizes[c] += 1;
    }
    sizes.iter().map(|&s| s.max(2)).collect()
}

pub fn generate(spec: &SynthSpec) -> Result<Dataset, DataError> {
    let k = spec.class_weights.len();
    if k < 2 || spec.class_weights.iter().any(|&w| !(w > 0.0)) {
        return Err(DataError::Invalid("need at least two positive class weights".into()));
    }
    if spec.n_features == 0 || spec.clusters_per_class == 0 || !(0.0..0.5).contains(&spec.label_noise) {
        return Err(DataError::Invalid("bad synthetic dataset parameters".into()));
    }
    let mut rng = rng_from_seed(spec.seed);
    let center_dist = Normal::new(0.0, spec.separation.max(0.0))
        .map_err(|e| DataError::Invalid(e.to_string()))?;
    let sizes = class_sizes(spec.n_instances, &spec.class_weights);
    let n: usize = sizes.iter().sum();
    let d = spec.n_features;
    let mut x = Array2::<f64>::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (class, &size) in sizes.iter().enumerate() {
        let centers: Vec<Vec<f64>> = (0..spec.clusters_per_class)
            .map(|_| (0..d).map(|_| center_dist.sample(&mut rng)).collect())
            .collect();
        for j in 0..size {
            let center = &centers[j % centers.len()];
            for f in 0..d {
                let z: f64 = StandardNormal.sample(&mut rng);
                x[[row, f]] = center[f] + z;
            }
            let flipped = rng.random_bool(spec.label_noise);
            labels.push(if flipped {
                (class + rng.random_range(1..k)) % k
            } else {
                class
            });
            row += 1;
        }
    }
    // Flipping could in principle empty a class; restore one member if so.
    for class in 0..k {
        if !labels.contains(&class) {
            let first = sizes[..class].iter().sum::<usize>();
            labels[first] = class;
        }
    }
    let names = (0..k).map(|c| format!("class{c}")).collect();
    Dataset::new(spec.name.clone(), x, labels, names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{classify_balance, BalanceClass};

    #[test]
    fn presets_have_the_intended_balance() {
        let b = generate(&SynthSpec::balanced("b", 200, 4, 1)).unwrap();
        assert_eq!(classify_balance(&b), BalanceClass::Balanced);
        let i = generate(&SynthSpec::imbalanced("i", 200, 4, 1)).unwrap();
        assert_eq!(classify_balance(&i), BalanceClass::Imbalanced);
        assert_eq!(b.n_instances(), 200);
        assert_eq!(i.n_features(), 4);
    }

    #[test]
    fn deterministic() {
        let spec = SynthSpec::balanced("b", 50, 3, 9);
        let (a, b) = (generate(&spec).unwrap(), generate(&spec).unwrap());
        assert_eq!(a.features(), b.features());
        assert_eq!(a.labels(), b.labels());
    }

    #[test]
    fn sizes_follow_weights() {
        assert_eq!(class_sizes(100, &[0.85, 0.15]), vec![85, 15]);
        assert_eq!(class_sizes(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(class_sizes(10, &[0.99, 0.01]), vec![10, 2]);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut spec = SynthSpec::balanced("b", 50, 3, 9);
        spec.class_weights = vec![1.0];
        assert!(generate(&spec).is_err());
    }
}
