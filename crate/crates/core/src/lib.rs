//! Cross-validation fold construction and evaluation.
//!
//! `foldlab` builds k-fold partitions with plain, stratified, neighbor-walk and
//! cluster-ordered strategies (including the per-class K-Means strategy SCBCV),
//! and measures how well each one estimates a model's true performance: bias
//! against a repeated stratified holdout, spread across repeated subsamples,
//! and wall-clock cost.
//!
//! Module map:
//!
//! - [`data`]: datasets, ingestion, standardization, class balance, stratified sampling
//! - [`clustering`]: K-Means, Mini-Batch K-Means, DBSCAN, agglomerative clustering and
//!   their hyperparameter estimators
//! - [`splitters`]: every fold-assignment strategy behind [`splitters::split`]
//! - [`learners`]: logistic regression, CART, random forest, metrics and grid search
//! - [`harness`]: true-performance estimation, repeated CV, experiment grids with resume
//! - [`stats`]: Friedman test, win counts and summary tables

pub mod clustering;
pub mod data;
pub mod harness;
pub mod learners;
pub mod seed;
pub mod splitters;
pub mod stats;
pub mod synth;

mod distance;

pub use data::{BalanceClass, ClassDistribution, Dataset};
pub use splitters::{FoldAssignment, SplitterKind, SplitterSpec};

