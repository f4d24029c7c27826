use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::meta::DatasetMeta;
use super::HarnessError;
use crate::clustering::{ClusterCountParams, DbscanParams, Linkage, DEFAULT_BATCH_SIZE};
use crate::learners::{F1Average, LearnerSpec, MetricKind};
use crate::splitters::{ClusterParams, SplitterKind, SplitterSpec};

/// A splitter as written in a config file. Fold count and seed are filled
/// in per cell; omitted clustering parameters are estimated per dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitterConfig {
    pub kind: SplitterKind,
    /// Identifier in records; defaults to the kind name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// K-Means / agglomerative cluster count; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_clusters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linkage: Option<Linkage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dbscan: Option<DbscanParams>,
}

impl SplitterConfig {
    pub fn new(kind: SplitterKind) -> Self {
        Self {
            kind,
            name: None,
            k_clusters: None,
            batch_size: None,
            linkage: None,
            dbscan: None,
        }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn with_clusters(mut self, k: usize) -> Self {
        self.k_clusters = Some(k);
        self
    }

    pub fn id(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.as_str().to_string())
    }

    /// Concrete spec for one dataset, fold count and seed.
    pub fn resolve(&self, meta: &DatasetMeta, k_splits: usize, seed: u64) -> Result<SplitterSpec, HarnessError> {
        let clusters = self.k_clusters.unwrap_or(meta.estimated_clusters);
        let params = match self.kind {
            SplitterKind::Scbcv | SplitterKind::ScbcvMini | SplitterKind::Kcbcv | SplitterKind::KcbcvMini => {
                Some(ClusterParams::Kmeans {
                    k_clusters: clusters,
                    batch_size: self.batch_size.unwrap_or(DEFAULT_BATCH_SIZE),
                })
            }
            SplitterKind::Acbcv => Some(ClusterParams::Agglomerative {
                n_clusters: clusters,
                linkage: self.linkage.unwrap_or_default(),
            }),
            SplitterKind::Dbscanbcv => Some(ClusterParams::Dbscan(
                self.dbscan
                    .or(meta.dbscan)
                    .ok_or_else(|| HarnessError::MissingDbscanParams(meta.id.clone()))?,
            )),
            _ => None,
        };
        let mut spec = SplitterSpec::new(self.kind, k_splits, seed);
        spec.cluster_params = params;
        Ok(spec)
    }
}

/// Frozen hyperparameters for one learner on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunedLearner {
    pub dataset: String,
    pub learner: String,
    pub hyperparams: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

fn default_fold_counts() -> Vec<usize> {
    vec![2, 10]
}
fn default_holdout_reps() -> usize {
    100
}
fn default_cv_reps() -> usize {
    20
}
fn default_train_fraction() -> f64 {
    0.9
}
fn default_label_column() -> String {
    "target".to_string()
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset files; relative paths are resolved against the config file.
    pub datasets: Vec<PathBuf>,
    pub splitters: Vec<SplitterConfig>,
    pub learners: Vec<LearnerSpec>,
    #[serde(default = "default_fold_counts")]
    pub fold_counts: Vec<usize>,
    #[serde(default = "default_holdout_reps")]
    pub holdout_reps: usize,
    #[serde(default = "default_cv_reps")]
    pub cv_reps: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    /// z-score features before clustering and learning.
    #[serde(default = "default_true")]
    pub standardize: bool,
    /// Run every cell on one worker so timings are not skewed by contention.
    #[serde(default)]
    pub timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric_override: Option<MetricKind>,
    #[serde(default)]
    pub f1_average: F1Average,
    #[serde(default)]
    pub cluster_estimation: ClusterCountParams,
    /// Hyperparameter grids for tuning; built-in grids when absent.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grids: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
    /// Per-dataset overrides produced by tuning.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tuned: Vec<TunedLearner>,
}

impl ExperimentConfig {
    pub fn new(datasets: Vec<PathBuf>, splitters: Vec<SplitterConfig>, learners: Vec<LearnerSpec>) -> Self {
        Self {
            datasets,
            splitters,
            learners,
            fold_counts: default_fold_counts(),
            holdout_reps: default_holdout_reps(),
            cv_reps: default_cv_reps(),
            train_fraction: default_train_fraction(),
            master_seed: 0,
            label_column: default_label_column(),
            standardize: true,
            timing: false,
            metric_override: None,
            f1_average: F1Average::default(),
            cluster_estimation: ClusterCountParams::default(),
            grids: BTreeMap::new(),
            tuned: Vec::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string_pretty(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    /// Makes relative dataset paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in &mut self.datasets {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.datasets.is_empty() || self.splitters.is_empty() || self.learners.is_empty() {
            return fail("datasets, splitters and learners must all be nonempty".into());
        }
        if self.holdout_reps < 2 || self.cv_reps < 2 {
            return fail("holdout_reps and cv_reps must be at least 2".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if self.fold_counts.is_empty() || self.fold_counts.iter().any(|&k| k < 2) {
            return fail("fold_counts must be nonempty and every k at least 2".into());
        }
        let mut ids = BTreeSet::new();
        for s in &self.splitters {
            if !ids.insert(s.id()) {
                return fail(format!("duplicate splitter id '{}'", s.id()));
            }
            if s.k_clusters == Some(0) || s.batch_size == Some(0) {
                return fail(format!("splitter '{}': cluster count and batch size must be positive", s.id()));
            }
        }
        let mut ids = BTreeSet::new();
        for l in &self.learners {
            if !ids.insert(l.id()) {
                return fail(format!("duplicate learner id '{}'", l.id()));
            }
            l.validate().map_err(|e| HarnessError::Config(format!("learner '{}': {e}", l.id())))?;
        }
        let mut ids = BTreeSet::new();
        for p in &self.datasets {
            if !ids.insert(dataset_id(p)) {
                return fail(format!("duplicate dataset name '{}'", dataset_id(p)));
            }
        }
        Ok(())
    }

    /// The learner as used on `dataset`, with any tuned hyperparameters applied.
    pub fn learner_for(&self, dataset: &str, learner: &LearnerSpec) -> LearnerSpec {
        let mut spec = learner.clone();
        if let Some(t) = self
            .tuned
            .iter()
            .find(|t| t.dataset == dataset && t.learner == learner.id())
        {
            spec.hyperparams.extend(t.hyperparams.clone());
        }
        spec
    }

    pub fn dataset_ids(&self) -> Vec<String> {
        self.datasets.iter().map(|p| dataset_id(p)).collect()
    }
}

/// Dataset identifier: the file name without its extension.
pub fn dataset_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
