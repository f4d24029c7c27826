use std::collections::HashMap;

use ndarray::ArrayView2;

use super::{Classifier, Learner, LearnerError, LearnerKind, TrainedModel};
use crate::data::Dataset;

/// Debug learner that answers every query with the true label of the
/// identical row in a reference dataset. Used for end-to-end null tests:
/// any evaluation pipeline should score it perfectly.
#[derive(Debug, Clone)]
pub struct OracleLearner {
    lookup: HashMap<Vec<u64>, usize>,
}

fn key(row: ndarray::ArrayView1<f64>) -> Vec<u64> {
    row.iter().map(|v| v.to_bits()).collect()
}

impl OracleLearner {
    /// Duplicate rows keep the label of their first occurrence.
    pub fn from_dataset(ds: &Dataset) -> Self {
        let mut lookup = HashMap::with_capacity(ds.n_instances());
        for (row, &label) in ds.features().rows().into_iter().zip(ds.labels()) {
            lookup.entry(key(row)).or_insert(label);
        }
        Self { lookup }
    }
}

#[derive(Debug)]
struct OracleModel {
    lookup: HashMap<Vec<u64>, usize>,
}

impl Classifier for OracleModel {
    fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>, LearnerError> {
        x.rows()
            .into_iter()
            .map(|row| self.lookup.get(&key(row)).copied().ok_or(LearnerError::OracleMiss))
            .collect()
    }
}

impl Learner for OracleLearner {
    fn kind(&self) -> LearnerKind {
        LearnerKind::Oracle
    }

    fn fit(&self, x: ArrayView2<f64>, _y: &[usize], n_classes: usize, _seed: u64) -> Result<TrainedModel, LearnerError> {
        Ok(TrainedModel::new(
            LearnerKind::Oracle,
            n_classes,
            x.ncols(),
            Box::new(OracleModel {
                lookup: self.lookup.clone(),
            }),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitters::test_util::random_dataset;

    #[test]
    fn returns_true_labels() {
        let ds = random_dataset(30, 3, 2, 1);
        let learner = OracleLearner::from_dataset(&ds);
        let model = learner.fit(ds.features().slice(ndarray::s![..5, ..]), &ds.labels()[..5], 3, 0).unwrap();
        assert_eq!(model.predict(ds.features()).unwrap(), ds.labels());
    }

    #[test]
    fn unknown_row_is_an_error() {
        let ds = random_dataset(10, 2, 2, 1);
        let model = OracleLearner::from_dataset(&ds).fit(ds.features(), ds.labels(), 2, 0).unwrap();
        assert_eq!(
            model.predict(ndarray::array![[1e9, 1e9]].view()).unwrap_err(),
            LearnerError::OracleMiss
        );
    }
}
