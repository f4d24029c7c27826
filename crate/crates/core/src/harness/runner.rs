use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::dataset_id;
use super::eval::{estimate_true_performance, expected_cv_estimate, select_metric, Scoring};
use super::meta::{analyze_dataset, DatasetMeta};
use super::{EvalRecord, ExperimentConfig, HarnessError, SCHEMA_VERSION};
use crate::data::{load_dataset, standardize, Dataset, LoadOptions};
use crate::learners::MetricKind;
use crate::seed::derive_seed;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const TRUE_PERF_FILE: &str = "true_performance.jsonl";
pub const DATASETS_FILE: &str = "datasets.json";
pub const ERRORS_FILE: &str = "errors.jsonl";

/// Identity of one grid cell; records are keyed and sorted by it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub dataset: String,
    pub learner: String,
    pub splitter: String,
    pub k_splits: usize,
}

impl std::fmt::Display for CellKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}/k={}", self.dataset, self.learner, self.splitter, self.k_splits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruePerformance {
    pub schema_version: u32,
    pub dataset: String,
    pub learner: String,
    pub metric_kind: MetricKind,
    pub holdout_reps: usize,
    pub true_perf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub key: CellKey,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Keep records already present in the output directory.
    pub resume: bool,
    /// Worker threads; `None` uses every core. Ignored for timing runs.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    /// Every grid cell in key order.
    pub cells: Vec<CellKey>,
    /// All successful records (resumed and new), sorted by key.
    pub records: Vec<EvalRecord>,
    pub failures: Vec<CellFailure>,
    /// Cells computed by this invocation.
    pub executed: Vec<CellKey>,
    pub workers: usize,
}

impl ExperimentConfig {
    /// Grid cells in key order.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut cells = Vec::new();
        for d in self.dataset_ids() {
            for l in &self.learners {
                for s in &self.splitters {
                    for &k in &self.fold_counts {
                        cells.push(CellKey {
                            dataset: d.clone(),
                            learner: l.id(),
                            splitter: s.id(),
                            k_splits: k,
                        });
                    }
                }
            }
        }
        cells.sort();
        cells
    }
}

/// Loads and preprocesses the configured datasets, named by file stem.
pub(crate) fn load_datasets(cfg: &ExperimentConfig) -> Result<Vec<Dataset>, HarnessError> {
    cfg.datasets
        .iter()
        .map(|path| {
            let ds = load_dataset(path, &LoadOptions::for_path(path, &cfg.label_column))?.with_name(dataset_id(path));
            Ok(if cfg.standardize { standardize(&ds) } else { ds })
        })
        .collect()
}

/// Runs the full grid, persisting into `out_dir`.
///
/// Files written:
/// - `datasets.json`: per-dataset summaries and clustering estimates
/// - `true_performance.jsonl`: one P̂ per (dataset, learner)
/// - `records.jsonl`: one [`EvalRecord`] per finished cell, sorted by key at the end
/// - `errors.jsonl`: failures of this invocation
///
/// With `resume`, cells already in `records.jsonl` (and reference scores in
/// `true_performance.jsonl`) are kept; otherwise those files are truncated.
/// A failing cell is logged and the rest of the grid continues.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, opts: &RunOptions) -> Result<RunReport, HarnessError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;

    let datasets = load_datasets(cfg)?;
    let metas: Vec<DatasetMeta> = datasets
        .par_iter()
        .zip(&cfg.datasets)
        .map(|(ds, path)| {
            let seed = derive_seed(cfg.master_seed, &["clusters", ds.name()]);
            analyze_dataset(ds, &path.display().to_string(), seed, &cfg.cluster_estimation)
        })
        .collect();
    write_json(&out_dir.join(DATASETS_FILE), &metas)?;

    let records_path = out_dir.join(RECORDS_FILE);
    let perf_path = out_dir.join(TRUE_PERF_FILE);
    let cells = cfg.cells();
    let grid: BTreeSet<&CellKey> = cells.iter().collect();

    let mut done: BTreeMap<CellKey, EvalRecord> = BTreeMap::new();
    let mut perf: BTreeMap<(String, String), TruePerformance> = BTreeMap::new();
    if opts.resume {
        for r in read_jsonl::<EvalRecord>(&records_path, true)? {
            if grid.contains(&r.key()) {
                done.insert(r.key(), r);
            }
        }
        for p in read_jsonl::<TruePerformance>(&perf_path, true)? {
            if p.holdout_reps == cfg.holdout_reps {
                perf.insert((p.dataset.clone(), p.learner.clone()), p);
            }
        }
    }
    // Rewrite both files with only the surviving entries; this also drops a
    // truncated final line left by an interrupted run.
    rewrite_jsonl(&records_path, done.values())?;
    rewrite_jsonl(&perf_path, perf.values())?;
    rewrite_jsonl::<CellFailure>(&out_dir.join(ERRORS_FILE), [].iter())?;

    let workers = if cfg.timing {
        1
    } else {
        opts.workers.unwrap_or_else(rayon::current_num_threads).max(1)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?;

    let by_id: BTreeMap<&str, (&Dataset, &DatasetMeta)> = datasets
        .iter()
        .zip(&metas)
        .map(|(d, m)| (d.name(), (d, m)))
        .collect();
    let pending: Vec<&CellKey> = cells.iter().filter(|k| !done.contains_key(*k)).collect();
    log::info!("{} cells total, {} already done, {} to run", cells.len(), done.len(), pending.len());

    // Reference scores for every (dataset, learner) with pending cells.
    let needed: BTreeSet<(String, String)> = pending
        .iter()
        .map(|k| (k.dataset.clone(), k.learner.clone()))
        .filter(|p| !perf.contains_key(p))
        .collect();
    let perf_writer = JsonlAppender::open(&perf_path)?;
    let computed: Vec<((String, String), Result<TruePerformance, String>)> = pool.install(|| {
        needed
            .par_iter()
            .map(|(d, l)| {
                let result = true_performance(cfg, by_id[d.as_str()].0, l).map_err(|e| e.to_string());
                if let Ok(p) = &result {
                    perf_writer.append(p);
                }
                ((d.clone(), l.clone()), result)
            })
            .collect()
    });
    let mut perf_errors: BTreeMap<(String, String), String> = BTreeMap::new();
    for (pair, result) in computed {
        match result {
            Ok(p) => {
                perf.insert(pair, p);
            }
            Err(e) => {
                perf_errors.insert(pair, e);
            }
        }
    }
    perf_writer.finish()?;
    rewrite_jsonl(&perf_path, perf.values())?;

    let record_writer = JsonlAppender::open(&records_path)?;
    let results: Vec<(CellKey, Result<EvalRecord, String>)> = pool.install(|| {
        pending
            .par_iter()
            .map(|key| {
                let pair = (key.dataset.clone(), key.learner.clone());
                let result = match (perf.get(&pair), perf_errors.get(&pair)) {
                    (Some(p), _) => {
                        let (ds, meta) = by_id[key.dataset.as_str()];
                        run_cell(cfg, ds, meta, key, p.true_perf).map_err(|e| e.to_string())
                    }
                    (None, Some(e)) => Err(format!("true performance: {e}")),
                    (None, None) => Err("true performance missing".to_string()),
                };
                match &result {
                    Ok(r) => record_writer.append(r),
                    Err(e) => log::warn!("cell {key} failed: {e}"),
                }
                ((*key).clone(), result)
            })
            .collect()
    });
    record_writer.finish()?;

    let mut failures = Vec::new();
    let mut executed = Vec::new();
    for (key, result) in results {
        executed.push(key.clone());
        match result {
            Ok(r) => {
                done.insert(key, r);
            }
            Err(error) => failures.push(CellFailure { key, error }),
        }
    }
    rewrite_jsonl(&records_path, done.values())?;
    rewrite_jsonl(&out_dir.join(ERRORS_FILE), failures.iter())?;

    Ok(RunReport {
        cells,
        records: done.into_values().collect(),
        failures,
        executed,
        workers,
    })
}

fn true_performance(cfg: &ExperimentConfig, ds: &Dataset, learner_id: &str) -> Result<TruePerformance, HarnessError> {
    let base = cfg.learners.iter().find(|l| l.id() == learner_id).expect("learner from grid");
    let spec = cfg.learner_for(ds.name(), base);
    let learner = spec.build(Some(ds))?;
    let metric = select_metric(ds, cfg.metric_override);
    let scoring = Scoring {
        metric,
        average: cfg.f1_average,
    };
    let seed = derive_seed(cfg.master_seed, &["holdout", ds.name()]);
    let value = estimate_true_performance(ds, learner.as_ref(), cfg.holdout_reps, cfg.train_fraction, seed, scoring)?;
    Ok(TruePerformance {
        schema_version: SCHEMA_VERSION,
        dataset: ds.name().to_string(),
        learner: learner_id.to_string(),
        metric_kind: metric,
        holdout_reps: cfg.holdout_reps,
        true_perf: value,
    })
}

fn run_cell(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    meta: &DatasetMeta,
    key: &CellKey,
    true_perf: f64,
) -> Result<EvalRecord, HarnessError> {
    let base = cfg.learners.iter().find(|l| l.id() == key.learner).expect("learner from grid");
    let learner_spec = cfg.learner_for(&key.dataset, base);
    let learner = learner_spec.build(Some(ds))?;
    let splitter = cfg.splitters.iter().find(|s| s.id() == key.splitter).expect("splitter from grid");
    let k = key.k_splits.to_string();
    let cell_seed = derive_seed(cfg.master_seed, &["cell", &key.dataset, &key.learner, &key.splitter, &k]);
    let spec = splitter.resolve(meta, key.k_splits, cell_seed)?;
    let metric = select_metric(ds, cfg.metric_override);
    let scoring = Scoring {
        metric,
        average: cfg.f1_average,
    };
    let subsample_seed = derive_seed(cfg.master_seed, &["cv-subsample", ds.name()]);
    let cv = expected_cv_estimate(ds, learner.as_ref(), &spec, cfg.cv_reps, cfg.train_fraction, subsample_seed, scoring)?;
    Ok(EvalRecord {
        schema_version: SCHEMA_VERSION,
        dataset: key.dataset.clone(),
        learner: key.learner.clone(),
        learner_kind: learner_spec.kind,
        splitter: key.splitter.clone(),
        splitter_kind: splitter.kind,
        k_splits: key.k_splits,
        balance: meta.balance,
        metric_kind: metric,
        bias: cv.cv_mean - true_perf,
        cv_mean: cv.cv_mean,
        std: cv.std,
        cv_estimates: cv.cv_estimates,
        true_perf,
        wall_seconds: cv.wall_seconds,
        fold_seconds: cv.fold_seconds,
        serial_timing: cfg.timing,
    })
}

/// Line-at-a-time JSON writer shared by worker threads.
struct JsonlAppender {
    path: String,
    file: Mutex<Option<File>>,
    error: Mutex<Option<std::io::Error>>,
}

impl JsonlAppender {
    fn open(path: &Path) -> Result<Self, HarnessError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| HarnessError::io(path, e))?;
        Ok(Self {
            path: path.display().to_string(),
            file: Mutex::new(Some(file)),
            error: Mutex::new(None),
        })
    }

    fn append<T: Serialize>(&self, value: &T) {
        let mut line = serde_json::to_string(value).expect("records serialize");
        line.push('\n');
        let mut guard = self.file.lock().expect("writer lock");
        if let Some(f) = guard.as_mut() {
            if let Err(e) = f.write_all(line.as_bytes()).and_then(|_| f.flush()) {
                *self.error.lock().expect("error lock") = Some(e);
            }
        }
    }

    fn finish(self) -> Result<(), HarnessError> {
        match self.error.into_inner().expect("error lock") {
            Some(source) => Err(HarnessError::Io { path: self.path, source }),
            None => Ok(()),
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    write_atomic(path, text.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| HarnessError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

fn rewrite_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl Iterator<Item = &'a T>) -> Result<(), HarnessError> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item).expect("serializable"));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

/// Reads JSON lines; a missing file is empty. With `tolerate_tail`, an
/// unparsable final line (an interrupted write) is skipped.
fn read_jsonl<T: DeserializeOwned>(path: &Path, tolerate_tail: bool) -> Result<Vec<T>, HarnessError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(HarnessError::io(path, e)),
    };
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::io(path, e))?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(v) => out.push(v),
            Err(e) if tolerate_tail && Some(i) == last => {
                log::warn!("{}: ignoring incomplete final line ({e})", path.display());
            }
            Err(e) => {
                return Err(HarnessError::Format {
                    path: path.display().to_string(),
                    message: format!("line {}: {e}", i + 1),
                })
            }
        }
    }
    Ok(out)
}

/// Records of a results directory, sorted by cell key.
pub fn load_records(dir: &Path) -> Result<Vec<EvalRecord>, HarnessError> {
    let path = dir.join(RECORDS_FILE);
    if !path.exists() {
        return Err(HarnessError::io(&path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    let mut records = read_jsonl::<EvalRecord>(&path, false)?;
    records.sort_by_key(EvalRecord::key);
    Ok(records)
}

pub fn load_true_performance(dir: &Path) -> Result<Vec<TruePerformance>, HarnessError> {
    read_jsonl(&dir.join(TRUE_PERF_FILE), false)
}

pub fn load_dataset_metas(dir: &Path) -> Result<Vec<DatasetMeta>, HarnessError> {
    let path = dir.join(DATASETS_FILE);
    let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
