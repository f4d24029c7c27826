//! Friedman rank tests, win counts and the tabulations built on them.

mod friedman;
mod gamma;
mod tables;
mod wins;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::EvalRecord;

pub use friedman::{average_ranks, friedman_test, FriedmanResult, PValueMethod};
pub use gamma::{chi_square_sf, gamma_q, ln_gamma};
pub use tables::{
    analyze_records, distribution_rows, friedman_rows, time_summary, write_analysis, write_csv, AnalysisOptions,
    AnalysisReport, DistributionRow, FriedmanRow, TimeRow, WinRow, ANALYSIS_FILES,
};
pub use wins::{win_counts, WinMeasure, WinTable};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least 2 treatments, found {0}")]
    TooFewTreatments(usize),
    #[error("need at least 2 complete blocks, found {0}")]
    TooFewBlocks(usize),
    #[error("table is not rectangular: row {row} has {got} values, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("non-finite value in row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("exact p-value for {blocks} blocks x {treatments} treatments is too large to enumerate")]
    ExactTooLarge { blocks: usize, treatments: usize },
    #[error("no complete comparison rows in the records")]
    EmptyGrid,
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

/// Per-record quantity compared across splitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    #[default]
    AbsBias,
    Bias,
    Std,
}

impl Measure {
    pub fn of(self, r: &EvalRecord) -> f64 {
        match self {
            Measure::AbsBias => r.bias.abs(),
            Measure::Bias => r.bias,
            Measure::Std => r.std,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::AbsBias => "abs_bias",
            Measure::Bias => "bias",
            Measure::Std => "std",
        }
    }
}

/// What a Friedman block (table row) is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockBy {
    /// One block per (dataset, learner).
    #[default]
    DatasetLearner,
    /// One block per dataset; learners are averaged.
    Dataset,
}

/// Blocks × treatments matrix of a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTable {
    pub blocks: Vec<String>,
    pub treatments: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl BlockTable {
    pub fn n_blocks(&self) -> usize {
        self.values.len()
    }

    pub fn n_treatments(&self) -> usize {
        self.treatments.len()
    }

    pub fn check(&self) -> Result<(), StatsError> {
        let k = self.n_treatments();
        if k < 2 {
            return Err(StatsError::TooFewTreatments(k));
        }
        if self.n_blocks() < 2 {
            return Err(StatsError::TooFewBlocks(self.n_blocks()));
        }
        for (row, vals) in self.values.iter().enumerate() {
            if vals.len() != k {
                return Err(StatsError::Ragged { row, got: vals.len(), expected: k });
            }
            if let Some(col) = vals.iter().position(|v| !v.is_finite()) {
                return Err(StatsError::NonFinite { row, col });
            }
        }
        Ok(())
    }

    /// Builds the table from records, treating each distinct splitter id as a
    /// treatment. Blocks missing any treatment are dropped; the second value is
    /// the number dropped.
    ///
    /// Under [`BlockBy::Dataset`] a block is kept only if every splitter has
    /// the same set of learners for that dataset.
    pub fn from_records(records: &[EvalRecord], measure: Measure, by: BlockBy) -> (BlockTable, usize) {
        let treatments: Vec<String> =
            records.iter().map(|r| r.splitter.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        // block -> treatment -> (learner, value)
        let mut cells: BTreeMap<String, BTreeMap<&str, Vec<(&str, f64)>>> = BTreeMap::new();
        for r in records {
            let block = match by {
                BlockBy::DatasetLearner => format!("{}/{}", r.dataset, r.learner),
                BlockBy::Dataset => r.dataset.clone(),
            };
            cells.entry(block).or_default().entry(&r.splitter).or_default().push((&r.learner, measure.of(r)));
        }
        let mut blocks = Vec::new();
        let mut values = Vec::new();
        let mut dropped = 0;
        for (block, by_treatment) in cells {
            let complete = by_treatment.len() == treatments.len() && {
                let mut sets = by_treatment.values().map(|v| {
                    let mut l: Vec<&str> = v.iter().map(|(l, _)| *l).collect();
                    l.sort_unstable();
                    l
                });
                let first = sets.next().unwrap_or_default();
                sets.all(|s| s == first)
            };
            let row: Vec<f64> = treatments
                .iter()
                .filter_map(|t| by_treatment.get(t.as_str()))
                .map(|v| v.iter().map(|(_, x)| x).sum::<f64>() / v.len() as f64)
                .collect();
            if complete && row.iter().all(|v| v.is_finite()) {
                blocks.push(block);
                values.push(row);
            } else {
                dropped += 1;
            }
        }
        (BlockTable { blocks, treatments, values }, dropped)
    }
}

/// Splitter kinds that run (Mini-Batch) K-Means.
pub(crate) fn uses_kmeans(kind: crate::SplitterKind) -> bool {
    use crate::SplitterKind::*;
    matches!(kind, Scbcv | ScbcvMini | Kcbcv | KcbcvMini)
}

#[cfg(test)]
pub(crate) mod test_util {
    use crate::data::BalanceClass;
    use crate::harness::{EvalRecord, SCHEMA_VERSION};
    use crate::learners::{LearnerKind, MetricKind};
    use crate::SplitterKind;

    pub fn record(dataset: &str, learner: &str, splitter: SplitterKind, k: usize, bias: f64, std: f64) -> EvalRecord {
        EvalRecord {
            schema_version: SCHEMA_VERSION,
            dataset: dataset.into(),
            learner: learner.into(),
            learner_kind: LearnerKind::Tree,
            splitter: splitter.as_str().into(),
            splitter_kind: splitter,
            k_splits: k,
            balance: BalanceClass::Balanced,
            metric_kind: MetricKind::Accuracy,
            cv_estimates: vec![0.8 + bias, 0.8 + bias],
            cv_mean: 0.8 + bias,
            true_perf: 0.8,
            bias,
            std,
            wall_seconds: vec![0.5, 0.25],
            fold_seconds: vec![0.25, 0.125],
            serial_timing: true,
        }
    }
}
