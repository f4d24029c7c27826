//! Bias, variance and cost measurement over an experiment grid.
//!
//! For every (dataset, learner) pair a reference score P̂ is estimated by
//! repeated stratified holdout. For every (dataset, learner, splitter, k)
//! cell, `cv_reps` stratified subsamples are cross-validated; the record
//! keeps each estimate, their mean and sample standard deviation, the bias
//! `mean − P̂`, and wall-clock timings.

mod config;
mod eval;
mod meta;
mod runner;
mod tune;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::ClusteringError;
use crate::data::{BalanceClass, DataError};
use crate::learners::{LearnerError, LearnerKind, MetricKind};
use crate::splitters::{SplitError, SplitterKind};

pub use config::{dataset_id, ExperimentConfig, SplitterConfig, TunedLearner};
pub use eval::{
    estimate_true_performance, expected_cv_estimate, mean, run_cv_once, sample_std, select_metric, CvRun,
    CvSummary, Scoring,
};
pub use meta::{analyze_dataset, DatasetMeta};
pub use tune::{tune_experiment, TuneFailure, TuneReport, TunedFile};
pub use runner::{
    load_dataset_metas, load_records, load_true_performance, run_experiment, CellFailure, CellKey, RunOptions,
    RunReport, TruePerformance, DATASETS_FILE, ERRORS_FILE, RECORDS_FILE, TRUE_PERF_FILE,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no DBSCAN parameters for dataset '{0}' (estimation failed and none configured)")]
    MissingDbscanParams(String),
}

impl HarnessError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// One evaluated grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub schema_version: u32,
    pub dataset: String,
    pub learner: String,
    pub learner_kind: LearnerKind,
    pub splitter: String,
    pub splitter_kind: SplitterKind,
    pub k_splits: usize,
    pub balance: BalanceClass,
    pub metric_kind: MetricKind,
    pub cv_estimates: Vec<f64>,
    pub cv_mean: f64,
    pub true_perf: f64,
    pub bias: f64,
    pub std: f64,
    /// Seconds per CV run, fold construction through scoring.
    pub wall_seconds: Vec<f64>,
    /// Seconds per CV run spent training and scoring folds.
    pub fold_seconds: Vec<f64>,
    /// Whether the run executed on a single worker.
    pub serial_timing: bool,
}

impl EvalRecord {
    pub fn key(&self) -> CellKey {
        CellKey {
            dataset: self.dataset.clone(),
            learner: self.learner.clone(),
            splitter: self.splitter.clone(),
            k_splits: self.k_splits,
        }
    }

    /// Recomputes mean, bias and sample std from `cv_estimates` and reports
    /// the largest absolute discrepancy with the stored fields.
    pub fn audit(&self) -> f64 {
        let m = mean(&self.cv_estimates);
        let s = sample_std(&self.cv_estimates);
        [
            (m - self.cv_mean).abs(),
            (m - self.true_perf - self.bias).abs(),
            (s - self.std).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Copy with timing fields zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> EvalRecord {
        EvalRecord {
            wall_seconds: vec![0.0; self.wall_seconds.len()],
            fold_seconds: vec![0.0; self.fold_seconds.len()],
            serial_timing: false,
            ..self.clone()
        }
    }
}
