use ndarray::ArrayView2;
use rand::Rng;
use rayon::prelude::*;

use super::tree::{grow, FeatureSampler, Tree};
use super::{argmax_count, check_training, Classifier, Learner, LearnerError, LearnerKind, TrainedModel};
use crate::seed::{mix_seed, rng_from_seed};

pub(crate) const DEFAULT_TREES: usize = 100;

/// Candidate features considered at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaxFeatures {
    /// `max(1, floor(sqrt(d)))`.
    #[default]
    Sqrt,
    /// Every feature, in index order (no sampling).
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, d: usize) -> Option<usize> {
        match self {
            MaxFeatures::Sqrt => Some(((d as f64).sqrt().floor() as usize).max(1)),
            MaxFeatures::All => None,
            MaxFeatures::Count(c) => Some(c.clamp(1, d)),
        }
    }
}

/// Random forest of CART trees with majority voting (lowest class on ties).
///
/// Tree `t` draws its bootstrap sample and feature subsets from its own
/// stream derived from `(seed, t)`, so results do not depend on thread
/// scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Forest {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
}

impl Default for Forest {
    fn default() -> Self {
        Self {
            n_trees: DEFAULT_TREES,
            max_depth: None,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
        }
    }
}

impl Learner for Forest {
    fn kind(&self) -> LearnerKind {
        LearnerKind::Forest
    }

    fn fit(&self, x: ArrayView2<f64>, y: &[usize], n_classes: usize, seed: u64) -> Result<TrainedModel, LearnerError> {
        if let Some(class) = check_training(x, y, n_classes)? {
            return Ok(TrainedModel::constant(LearnerKind::Forest, n_classes, x.ncols(), class));
        }
        let (n, d) = x.dim();
        let per_node = self.max_features.resolve(d);
        let trees: Vec<Tree> = (0..self.n_trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_from_seed(mix_seed(seed, t as u64));
                let rows: Vec<usize> = if self.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let sampler = per_node.map(|max_features| FeatureSampler {
                    max_features,
                    rng: &mut rng,
                });
                grow(x, y, n_classes, rows, self.max_depth, sampler)
            })
            .collect();
        Ok(TrainedModel::new(
            LearnerKind::Forest,
            n_classes,
            d,
            Box::new(ForestModel { trees, n_classes }),
        ))
    }
}

#[derive(Debug)]
struct ForestModel {
    trees: Vec<Tree>,
    n_classes: usize,
}

impl Classifier for ForestModel {
    fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>, LearnerError> {
        Ok(x.rows()
            .into_iter()
            .map(|row| {
                let mut votes = vec![0; self.n_classes];
                for tree in &self.trees {
                    votes[tree.predict_row(row)] += 1;
                }
                argmax_count(&votes)
            })
            .collect())
    }
}
