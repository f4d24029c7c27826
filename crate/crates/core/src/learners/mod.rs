//! Built-in classifiers, metrics and grid-search tuning.
//!
//! Learners are configured by a [`LearnerSpec`] and produce a
//! [`TrainedModel`]. New kinds plug in by implementing [`Learner`] and
//! [`Classifier`]; the harness only talks to those traits.

mod forest;
mod grid;
mod logreg;
pub mod metrics;
mod oracle;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::splitters::SplitError;

pub use forest::{Forest, MaxFeatures};
pub use grid::{default_grid, grid_combinations, grid_search, GridSearchResult, HyperGrid, GRID_FOLDS};
pub use logreg::{LogisticRegression, LOGREG_EPOCHS, LOGREG_LEARNING_RATE};
pub use metrics::{
    accuracy, balanced_accuracy, confusion, f1_score, f1_score_with, ConfusionCounts, F1Average, MetricKind,
};
pub use oracle::OracleLearner;
pub use tree::DecisionTree;

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("non-finite feature value in training data")]
    NonFinite,
    #[error("{rows} feature rows but {labels} labels")]
    ShapeMismatch { rows: usize, labels: usize },
    #[error("model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{truth} true labels but {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("label {label} outside [0, {n_classes})")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("class {0} is absent from the evaluation labels")]
    AbsentClass(usize),
    #[error("'{kind}' does not take hyperparameter '{name}'")]
    UnknownHyperparameter { kind: LearnerKind, name: String },
    #[error("invalid value {value} for hyperparameter '{name}'")]
    InvalidHyperparameter { name: String, value: f64 },
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("the oracle learner needs the reference dataset")]
    MissingReference,
    #[error("the oracle learner has no label for a queried row")]
    OracleMiss,
    #[error(transparent)]
    Split(#[from] SplitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    #[serde(alias = "LOGREG", alias = "lr")]
    Logreg,
    #[serde(alias = "TREE", alias = "dt")]
    Tree,
    #[serde(alias = "FOREST", alias = "rf")]
    Forest,
    /// Debug learner that looks up the true label of every queried row.
    Oracle,
}

impl LearnerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Logreg => "logreg",
            LearnerKind::Tree => "tree",
            LearnerKind::Forest => "forest",
            LearnerKind::Oracle => "oracle",
        }
    }

    pub fn allowed_hyperparams(self) -> &'static [&'static str] {
        match self {
            LearnerKind::Logreg => &["C"],
            LearnerKind::Tree => &["max_depth"],
            LearnerKind::Forest => &["max_depth", "n_trees"],
            LearnerKind::Oracle => &[],
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "logreg" | "lr" => Ok(LearnerKind::Logreg),
            "tree" | "dt" => Ok(LearnerKind::Tree),
            "forest" | "rf" => Ok(LearnerKind::Forest),
            "oracle" => Ok(LearnerKind::Oracle),
            other => Err(format!("unknown learner kind '{other}'")),
        }
    }
}

/// A learner kind plus frozen hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    /// Identifier in records; defaults to the kind name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: LearnerKind,
    #[serde(default)]
    pub hyperparams: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

impl LearnerSpec {
    pub fn new(kind: LearnerKind) -> Self {
        Self {
            name: None,
            kind,
            hyperparams: BTreeMap::new(),
            seed: 0,
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.hyperparams.insert(name.to_string(), value);
        self
    }

    pub fn id(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.as_str().to_string())
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        for (name, &value) in &self.hyperparams {
            if !self.kind.allowed_hyperparams().contains(&name.as_str()) {
                return Err(LearnerError::UnknownHyperparameter {
                    kind: self.kind,
                    name: name.clone(),
                });
            }
            let ok = match name.as_str() {
                "C" => value.is_finite() && value > 0.0,
                _ => value.is_finite() && value >= 1.0 && value.fract() == 0.0,
            };
            if !ok {
                return Err(LearnerError::InvalidHyperparameter { name: name.clone(), value });
            }
        }
        Ok(())
    }

    fn int_param(&self, name: &str) -> Option<usize> {
        self.hyperparams.get(name).map(|&v| v as usize)
    }

    /// Instantiates the learner. `reference` is consulted only by the oracle.
    pub fn build(&self, reference: Option<&Dataset>) -> Result<Box<dyn Learner>, LearnerError> {
        self.validate()?;
        Ok(match self.kind {
            LearnerKind::Logreg => {
                let c = self.hyperparams.get("C").copied().unwrap_or(1.0);
                Box::new(LogisticRegression::new(c))
            }
            LearnerKind::Tree => Box::new(DecisionTree::new(self.int_param("max_depth"))),
            LearnerKind::Forest => Box::new(Forest {
                n_trees: self.int_param("n_trees").unwrap_or(forest::DEFAULT_TREES),
                max_depth: self.int_param("max_depth"),
                ..Forest::default()
            }),
            LearnerKind::Oracle => Box::new(OracleLearner::from_dataset(
                reference.ok_or(LearnerError::MissingReference)?,
            )),
        })
    }
}

/// Fits a model to labelled rows.
pub trait Learner: Send + Sync {
    fn kind(&self) -> LearnerKind;

    fn fit(
        &self,
        x: ArrayView2<f64>,
        y: &[usize],
        n_classes: usize,
        seed: u64,
    ) -> Result<TrainedModel, LearnerError>;
}

/// Learned parameters of one fitted model.
pub trait Classifier: Send + Sync + fmt::Debug {
    /// One class id per row; the caller has already checked the width.
    fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>, LearnerError>;
}

#[derive(Debug)]
pub struct TrainedModel {
    pub kind: LearnerKind,
    pub n_classes: usize,
    pub n_features: usize,
    inner: Box<dyn Classifier>,
    constant: Option<usize>,
}

impl TrainedModel {
    pub fn new(kind: LearnerKind, n_classes: usize, n_features: usize, inner: Box<dyn Classifier>) -> Self {
        Self {
            kind,
            n_classes,
            n_features,
            inner,
            constant: None,
        }
    }

    /// A model that always predicts `class` (single-class training data).
    pub fn constant(kind: LearnerKind, n_classes: usize, n_features: usize, class: usize) -> Self {
        Self {
            kind,
            n_classes,
            n_features,
            inner: Box::new(Constant(class)),
            constant: Some(class),
        }
    }

    /// Whether training degenerated to a constant predictor.
    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>, LearnerError> {
        if x.ncols() != self.n_features {
            return Err(LearnerError::DimensionMismatch {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        self.inner.predict(x)
    }
}

#[derive(Debug)]
struct Constant(usize);

impl Classifier for Constant {
    fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>, LearnerError> {
        Ok(vec![self.0; x.nrows()])
    }
}

/// Trains `spec` on `(x, y)` with the spec's own seed.
pub fn train(spec: &LearnerSpec, x: ArrayView2<f64>, y: &[usize], n_classes: usize) -> Result<TrainedModel, LearnerError> {
    spec.build(None)?.fit(x, y, n_classes, spec.seed)
}

/// Shared input checks. Returns `Some(class)` when only one class is present.
pub(crate) fn check_training(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
) -> Result<Option<usize>, LearnerError> {
    if x.nrows() == 0 {
        return Err(LearnerError::EmptyTrainingSet);
    }
    if x.nrows() != y.len() {
        return Err(LearnerError::ShapeMismatch {
            rows: x.nrows(),
            labels: y.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LearnerError::NonFinite);
    }
    if let Some(&label) = y.iter().find(|&&l| l >= n_classes) {
        return Err(LearnerError::LabelOutOfRange { label, n_classes });
    }
    let first = y[0];
    if y.iter().all(|&l| l == first) {
        log::debug!("single-class training set; using a constant predictor for class {first}");
        return Ok(Some(first));
    }
    Ok(None)
}

/// Index of the largest count, lowest index on ties.
pub(crate) fn argmax_count(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}
