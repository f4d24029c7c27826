use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::runner::load_datasets;
use super::{ExperimentConfig, HarnessError, TunedLearner};
use crate::learners::{default_grid, grid_search, HyperGrid, LearnerSpec};
use crate::seed::derive_seed;

/// Result of tuning every (dataset, learner) pair of a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    /// Sorted by (dataset, learner).
    pub tuned: Vec<TunedLearner>,
    pub failures: Vec<TuneFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneFailure {
    pub dataset: String,
    pub learner: String,
    pub error: String,
}

impl ExperimentConfig {
    /// Grid for `learner`: `grids[<learner id>]`, then `grids[<kind>]`, then
    /// the built-in default for its kind.
    pub fn grid_for(&self, learner: &LearnerSpec) -> HyperGrid {
        self.grids
            .get(&learner.id())
            .or_else(|| self.grids.get(learner.kind.as_str()))
            .cloned()
            .unwrap_or_else(|| default_grid(learner.kind))
    }
}

/// Grid-searches each learner on each dataset. A failing pair is reported
/// and skipped; only dataset loading aborts the whole run.
pub fn tune_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<TuneReport, HarnessError> {
    cfg.validate()?;
    let datasets = load_datasets(cfg)?;
    let pairs: Vec<_> = datasets.iter().flat_map(|ds| cfg.learners.iter().map(move |l| (ds, l))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or_else(rayon::current_num_threads).max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<TunedLearner, TuneFailure>> = pool.install(|| {
        pairs
            .par_iter()
            .map(|(ds, learner)| {
                let seed = derive_seed(cfg.master_seed, &["tune", ds.name(), &learner.id()]);
                grid_search(ds, learner, &cfg.grid_for(learner), seed)
                    .map(|r| TunedLearner {
                        dataset: ds.name().to_string(),
                        learner: learner.id(),
                        hyperparams: r.best.hyperparams,
                        score: Some(r.best_score),
                    })
                    .map_err(|e| TuneFailure {
                        dataset: ds.name().to_string(),
                        learner: learner.id(),
                        error: e.to_string(),
                    })
            })
            .collect()
    });
    let mut tuned = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(t) => tuned.push(t),
            Err(f) => {
                log::warn!("tuning {} on {} failed: {}", f.learner, f.dataset, f.error);
                failures.push(f);
            }
        }
    }
    tuned.sort_by(|a, b| (&a.dataset, &a.learner).cmp(&(&b.dataset, &b.learner)));
    Ok(TuneReport { tuned, failures })
}

/// Tuned hyperparameters as stored on disk.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TunedFile {
    #[serde(default)]
    pub tuned: Vec<TunedLearner>,
}

impl TunedFile {
    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string_pretty(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }
}

impl ExperimentConfig {
    /// Adds tuned entries, replacing any existing entry for the same pair.
    pub fn merge_tuned(&mut self, tuned: &[TunedLearner]) {
        let mut by_pair: BTreeMap<(String, String), TunedLearner> = self
            .tuned
            .drain(..)
            .map(|t| ((t.dataset.clone(), t.learner.clone()), t))
            .collect();
        for t in tuned {
            by_pair.insert((t.dataset.clone(), t.learner.clone()), t.clone());
        }
        self.tuned = by_pair.into_values().collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::write_dataset;
    use crate::learners::LearnerKind;
    use crate::synth::{generate, SynthSpec};
    use crate::SplitterKind;

    fn config(dir: &std::path::Path) -> ExperimentConfig {
        let path = dir.join("syn.tsv");
        write_dataset(&generate(&SynthSpec::balanced("syn", 80, 2, 1)).unwrap(), &path, b'\t').unwrap();
        ExperimentConfig::new(
            vec![path],
            vec![super::super::SplitterConfig::new(SplitterKind::Scv)],
            vec![LearnerSpec::new(LearnerKind::Tree), LearnerSpec::new(LearnerKind::Logreg)],
        )
    }

    #[test]
    fn singleton_grids_are_echoed() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path());
        cfg.grids.insert("tree".into(), BTreeMap::from([("max_depth".to_string(), vec![7.0])]));
        cfg.grids.insert("logreg".into(), BTreeMap::from([("C".to_string(), vec![0.3])]));
        let report = tune_experiment(&cfg, Some(2)).unwrap();
        assert!(report.failures.is_empty());
        assert_eq!(report.tuned.len(), 2);
        assert_eq!(report.tuned[0].learner, "logreg");
        assert_eq!(report.tuned[0].hyperparams["C"], 0.3);
        assert_eq!(report.tuned[1].hyperparams["max_depth"], 7.0);
    }

    #[test]
    fn default_grid_when_absent_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path());
        let tree = LearnerSpec::new(LearnerKind::Tree);
        assert_eq!(cfg.grid_for(&tree), default_grid(LearnerKind::Tree));
        let a = tune_experiment(&cfg, Some(1)).unwrap();
        let b = tune_experiment(&cfg, Some(3)).unwrap();
        assert_eq!(a, b);
        let file = TunedFile { tuned: a.tuned.clone() };
        assert_eq!(TunedFile::from_toml(&file.to_toml().unwrap()).unwrap(), file);
    }

    #[test]
    fn merge_replaces_by_pair() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path());
        let t = |c: f64| TunedLearner {
            dataset: "syn".into(),
            learner: "logreg".into(),
            hyperparams: BTreeMap::from([("C".to_string(), c)]),
            score: None,
        };
        cfg.merge_tuned(&[t(1.0)]);
        cfg.merge_tuned(&[t(2.0)]);
        assert_eq!(cfg.tuned, vec![t(2.0)]);
    }
}
