use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::MetricKind;
use super::{F1Average, LearnerError, LearnerKind, LearnerSpec};
use crate::data::Dataset;
use crate::seed::mix_seed;
use crate::splitters::{materialize_folds, split_scv};

/// Hyperparameter name to candidate values.
pub type HyperGrid = BTreeMap<String, Vec<f64>>;

pub const GRID_FOLDS: usize = 5;

/// Tested values for each learner kind (empty for the oracle).
pub fn default_grid(kind: LearnerKind) -> HyperGrid {
    let depths = vec![1.0, 5.0, 10.0, 15.0, 50.0];
    match kind {
        LearnerKind::Logreg => HyperGrid::from([("C".to_string(), vec![0.003, 0.03, 0.3, 3.0, 30.0])]),
        LearnerKind::Tree | LearnerKind::Forest => HyperGrid::from([("max_depth".to_string(), depths)]),
        LearnerKind::Oracle => HyperGrid::new(),
    }
}

/// Cartesian product in grid order: keys ascending, the last key varying fastest.
pub fn grid_combinations(grid: &HyperGrid) -> Vec<BTreeMap<String, f64>> {
    let mut combos = vec![BTreeMap::new()];
    for (name, values) in grid {
        combos = combos
            .into_iter()
            .flat_map(|base| {
                values.iter().map(move |&v| {
                    let mut c = base.clone();
                    c.insert(name.clone(), v);
                    c
                })
            })
            .collect();
    }
    combos
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: LearnerSpec,
    pub best_score: f64,
    /// Every combination with its mean balanced accuracy, in grid order.
    pub scores: Vec<(BTreeMap<String, f64>, f64)>,
}

/// Five-fold stratified CV over every combination, scored by mean balanced
/// accuracy; the first best combination in grid order wins.
///
/// All combinations see the same folds. Fixed hyperparameters in `base`
/// are kept unless the grid overrides them. A fold missing a class is
/// scored by mean recall over the classes it does contain.
pub fn grid_search(
    ds: &Dataset,
    base: &LearnerSpec,
    grid: &HyperGrid,
    seed: u64,
) -> Result<GridSearchResult, LearnerError> {
    let combos = grid_combinations(grid);
    if grid.values().any(Vec::is_empty) {
        return Err(LearnerError::EmptyGrid);
    }
    let folds = materialize_folds(&split_scv(ds, GRID_FOLDS, seed)?);
    let x = ds.features();
    let k = ds.n_classes();

    let mut scores = Vec::with_capacity(combos.len());
    for combo in combos {
        let mut spec = base.clone();
        spec.hyperparams.extend(combo.clone());
        let learner = spec.build(Some(ds))?;
        let mut total = 0.0;
        for (j, (train, test)) in folds.iter().enumerate() {
            let xt = x.select(ndarray::Axis(0), train);
            let yt: Vec<usize> = train.iter().map(|&i| ds.labels()[i]).collect();
            let model = learner.fit(xt.view(), &yt, k, mix_seed(seed ^ spec.seed, j as u64))?;
            let pred = model.predict(x.select(ndarray::Axis(0), test).view())?;
            let truth: Vec<usize> = test.iter().map(|&i| ds.labels()[i]).collect();
            total += MetricKind::BalancedAccuracy.score(&truth, &pred, k, F1Average::Macro)?;
        }
        scores.push((combo, total / folds.len() as f64));
    }

    let mut best = 0;
    for (i, (_, s)) in scores.iter().enumerate() {
        if *s > scores[best].1 {
            best = i;
        }
    }
    let mut spec = base.clone();
    spec.hyperparams.extend(scores[best].0.clone());
    Ok(GridSearchResult {
        best: spec,
        best_score: scores[best].1,
        scores,
    })
}
