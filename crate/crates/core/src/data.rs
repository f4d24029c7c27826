//! Datasets, ingestion, standardization, class balance and stratified sampling.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::rng_from_seed;

/// Datasets with an imbalance index strictly above this are imbalanced.
pub const IMBALANCE_THRESHOLD: f64 = 0.20;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed delimited file {path}: {message}")]
    Malformed { path: String, message: String },
    #[error("unparsable cell at row {row}, column '{column}': {value:?}")]
    UnparsableCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("label column '{0}' not found")]
    MissingLabelColumn(String),
    #[error("dataset needs at least 2 classes, found {0}")]
    TooFewClasses(usize),
    #[error("dataset needs at least 2 instances, found {0}")]
    TooFewInstances(usize),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("sampling fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("class {class} ({size} instances) would become empty at fraction {fraction}")]
    EmptyClass {
        class: usize,
        size: usize,
        fraction: f64,
    },
    #[error("class {class} has {size} instance(s); a holdout needs it on the training side and at least 2 instances")]
    ClassTooSmall { class: usize, size: usize },
}

/// Dense feature matrix plus integer class labels.
///
/// Labels are dense ids in `[0, K)`. A dataset built through [`Dataset::new`]
/// contains every class at least once; subsets produced by [`Dataset::subset`]
/// keep the parent's class universe and may miss some classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Array2<f64>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Array2<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, DataError> {
        if labels.len() != features.nrows() {
            return Err(DataError::Invalid(format!(
                "{} labels for {} rows",
                labels.len(),
                features.nrows()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Invalid("non-finite feature value".into()));
        }
        let k = class_names.len();
        let mut seen = vec![false; k];
        for &label in &labels {
            if label >= k {
                return Err(DataError::Invalid(format!(
                    "label {label} outside [0, {k})"
                )));
            }
            seen[label] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(DataError::Invalid(format!(
                "class {missing} ('{}') has no instances",
                class_names[missing]
            )));
        }
        Ok(Self {
            name: name.into(),
            features: features.as_standard_layout().into_owned(),
            labels,
            class_names,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_instances(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_distribution(&self) -> ClassDistribution {
        ClassDistribution::from_labels(&self.labels, self.n_classes())
    }

    /// Instance indices of each class, ascending, in class-id order.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_classes()];
        for (i, &label) in self.labels.iter().enumerate() {
            members[label].push(i);
        }
        members
    }

    /// Rows `indices` in the given order, sharing this dataset's class universe.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

// ── Ingestion ─────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub label_column: String,
    /// Field delimiter; `b'\t'` for PMLB-style TSV.
    pub delimiter: u8,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            label_column: "target".into(),
            delimiter: b'\t',
        }
    }
}

impl LoadOptions {
    pub fn csv() -> Self {
        Self {
            delimiter: b',',
            ..Self::default()
        }
    }

    /// TSV unless the file extension says `.csv`.
    pub fn for_path(path: &Path, label_column: &str) -> Self {
        let delimiter = match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => b',',
            _ => b'\t',
        };
        Self {
            label_column: label_column.to_string(),
            delimiter,
        }
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "?" | "NA" | "na" | "N/A" | "NaN" | "nan" | "null")
}

/// Loads a delimited text file with a header row.
///
/// Labels are re-encoded to `0..K` in order of first appearance. Rows with a
/// missing value are dropped; any other non-numeric feature cell is an error.
pub fn load_dataset(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: shown.clone(),
        source,
    })?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .map(|s| s.trim_end_matches(".tsv").to_string())
        .unwrap_or_else(|| shown.clone());
    parse_dataset(&text, &name, opts).map_err(|e| match e {
        DataError::Malformed { message, .. } => DataError::Malformed {
            path: shown,
            message,
        },
        other => other,
    })
}

/// Parses delimited text already in memory; see [`load_dataset`].
pub fn parse_dataset(text: &str, name: &str, opts: &LoadOptions) -> Result<Dataset, DataError> {
    let malformed = |e: csv::Error| DataError::Malformed {
        path: name.to_string(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(malformed)?
        .iter()
        .map(str::to_string)
        .collect();
    let label_col = headers
        .iter()
        .position(|h| h == &opts.label_column)
        .ok_or_else(|| DataError::MissingLabelColumn(opts.label_column.clone()))?;
    let n_features = headers.len() - 1;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut class_ids: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    let mut dropped = 0usize;

    'rows: for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(malformed)?;
        let mut row = Vec::with_capacity(n_features);
        let mut label = None;
        for (col, cell) in record.iter().enumerate() {
            if is_missing(cell) {
                dropped += 1;
                continue 'rows;
            }
            if col == label_col {
                label = Some(cell.to_string());
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                Ok(_) => {
                    dropped += 1;
                    continue 'rows;
                }
                Err(_) => {
                    return Err(DataError::UnparsableCell {
                        row: row_no + 1,
                        column: headers[col].clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        let Some(label) = label else {
            dropped += 1;
            continue;
        };
        let next_id = class_ids.len();
        let id = *class_ids.entry(label.clone()).or_insert_with(|| {
            class_names.push(label);
            next_id
        });
        values.extend(row);
        labels.push(id);
    }
    if dropped > 0 {
        log::warn!("{name}: dropped {dropped} row(s) with missing values");
    }
    if labels.len() < 2 {
        return Err(DataError::TooFewInstances(labels.len()));
    }
    if class_names.len() < 2 {
        return Err(DataError::TooFewClasses(class_names.len()));
    }
    let features = Array2::from_shape_vec((labels.len(), n_features), values)
        .map_err(|e| DataError::Invalid(e.to_string()))?;
    Dataset::new(name, features, labels, class_names)
}

/// Writes `ds` as delimited text with a `target` column holding class names.
pub fn write_dataset(ds: &Dataset, path: impl AsRef<Path>, delimiter: u8) -> Result<(), DataError> {
    let path = path.as_ref();
    let io_err = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut writer = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_path(path)
        .map_err(|e| DataError::Malformed {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    let mut header: Vec<String> = (0..ds.n_features()).map(|j| format!("x{j}")).collect();
    header.push("target".into());
    let to_err = |e: csv::Error| DataError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    writer.write_record(&header).map_err(to_err)?;
    for (row, &label) in ds.features.rows().into_iter().zip(&ds.labels) {
        let mut record: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        record.push(ds.class_names[label].clone());
        writer.write_record(&record).map_err(to_err)?;
    }
    writer.flush().map_err(io_err)
}

// ── Scaling ───────────────────────────────────────────────────────────

/// Z-scores every column using the population (divide-by-n) standard deviation.
/// Constant columns become all zeros.
pub fn standardize(ds: &Dataset) -> Dataset {
    let n = ds.n_instances() as f64;
    let mut features = ds.features.clone();
    for mut column in features.columns_mut() {
        let mean = column.sum() / n;
        let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if std > 1e-12 * (1.0 + mean.abs()) {
            column.mapv_inplace(|v| (v - mean) / std);
        } else {
            column.fill(0.0);
        }
    }
    Dataset {
        features,
        ..ds.clone()
    }
}

// ── Class balance ─────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    pub counts: Vec<usize>,
    pub proportions: Vec<f64>,
}

impl ClassDistribution {
    pub fn from_labels(labels: &[usize], n_classes: usize) -> Self {
        let mut counts = vec![0usize; n_classes];
        for &l in labels {
            counts[l] += 1;
        }
        Self::from_counts(counts)
    }

    pub fn from_counts(counts: Vec<usize>) -> Self {
        let total: usize = counts.iter().sum();
        let proportions = counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect();
        Self {
            counts,
            proportions,
        }
    }

    /// Distribution given directly by proportions (counts left empty).
    pub fn from_proportions(proportions: Vec<f64>) -> Self {
        Self {
            counts: Vec::new(),
            proportions,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// `K * sum_i (p_i - 1/K)^2`, the squared distance from the uniform class
/// distribution. Ranges over `[0, K - 1]`.
pub fn raw_imbalance_index(dist: &ClassDistribution) -> f64 {
    let k = dist.proportions.len() as f64;
    if k == 0.0 {
        return 0.0;
    }
    let uniform = 1.0 / k;
    k * dist
        .proportions
        .iter()
        .map(|p| (p - uniform) * (p - uniform))
        .sum::<f64>()
}

/// Class imbalance in `[0, 1]`: [`raw_imbalance_index`] divided by its
/// maximum `K - 1`. Identical to the raw index for two classes; 0 for a
/// uniform distribution and 1 when a single class holds every instance.
///
/// The normalization reproduces published multiclass values, e.g. 0.79 for
/// ann_thyroid (3 classes) and 0.23 for wine_quality_red (6 classes).
pub fn imbalance_index(dist: &ClassDistribution) -> f64 {
    let k = dist.proportions.len();
    if k < 2 {
        return 0.0;
    }
    raw_imbalance_index(dist) / (k - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BalanceClass {
    Balanced,
    Imbalanced,
}

impl BalanceClass {
    pub fn from_index(index: f64) -> Self {
        if index > IMBALANCE_THRESHOLD {
            BalanceClass::Imbalanced
        } else {
            BalanceClass::Balanced
        }
    }
}

impl fmt::Display for BalanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BalanceClass::Balanced => "balanced",
            BalanceClass::Imbalanced => "imbalanced",
        })
    }
}

pub fn classify_balance(ds: &Dataset) -> BalanceClass {
    BalanceClass::from_index(imbalance_index(&ds.class_distribution()))
}

// ── Sampling ──────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsampleSpec {
    pub fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

/// Per-class sample sizes: floor of `fraction * n_i`, with the seats left to
/// reach `round(fraction * N)` going to the largest fractional parts (ties to
/// the lower class id).
pub fn stratified_counts(counts: &[usize], fraction: f64) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    let target = (fraction * total as f64).round() as usize;
    let exact: Vec<f64> = counts.iter().map(|&c| fraction * c as f64).collect();
    let mut chosen: Vec<usize> = exact
        .iter()
        .zip(counts)
        .map(|(e, &c)| ((e + 1e-9).floor() as usize).min(c))
        .collect();
    let assigned: usize = chosen.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - chosen[a] as f64;
        let fb = exact[b] - chosen[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut remaining = target.saturating_sub(assigned);
    for class in order {
        if remaining == 0 {
            break;
        }
        if chosen[class] < counts[class] {
            chosen[class] += 1;
            remaining -= 1;
        }
    }
    chosen
}

fn check_fraction(fraction: f64) -> Result<(), DataError> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(DataError::InvalidFraction(fraction))
    }
}

/// Seeded subsample; returns the chosen original indices (ascending) and the
/// induced sub-dataset.
pub fn stratified_subsample(
    ds: &Dataset,
    spec: &SubsampleSpec,
) -> Result<(Vec<usize>, Dataset), DataError> {
    check_fraction(spec.fraction)?;
    let mut rng = rng_from_seed(spec.seed);
    let mut selected = if spec.stratified {
        let members = ds.class_members();
        let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
        let counts = stratified_counts(&sizes, spec.fraction);
        let mut selected = Vec::new();
        for (class, (mut pool, take)) in members.into_iter().zip(counts).enumerate() {
            if take == 0 && !pool.is_empty() {
                return Err(DataError::EmptyClass {
                    class,
                    size: pool.len(),
                    fraction: spec.fraction,
                });
            }
            pool.shuffle(&mut rng);
            selected.extend_from_slice(&pool[..take]);
        }
        selected
    } else {
        let n = ds.n_instances();
        let take = ((spec.fraction * n as f64).round() as usize).max(1);
        let mut pool: Vec<usize> = (0..n).collect();
        pool.shuffle(&mut rng);
        pool.truncate(take);
        pool
    };
    selected.sort_unstable();
    let sub = ds.subset(&selected);
    Ok((selected, sub))
}

/// Stratified train/test partition; test is the complement of the train side.
///
/// Every class keeps at least one training instance. When rounding leaves the
/// test side too small to hold every class, the smallest remainders miss out.
pub fn stratified_holdout_split(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::InvalidFraction(train_fraction));
    }
    let dist = ds.class_distribution();
    if let Some((class, &size)) = dist.counts.iter().enumerate().find(|(_, &c)| c < 2) {
        return Err(DataError::ClassTooSmall { class, size });
    }
    let (train, _) = stratified_subsample(
        ds,
        &SubsampleSpec {
            fraction: train_fraction,
            stratified: true,
            seed,
        },
    )
    .map_err(|e| match e {
        DataError::EmptyClass { class, size, .. } => DataError::ClassTooSmall { class, size },
        other => other,
    })?;
    let mut in_train = vec![false; ds.n_instances()];
    for &i in &train {
        in_train[i] = true;
    }
    let test: Vec<usize> = (0..ds.n_instances()).filter(|&i| !in_train[i]).collect();
    if test.is_empty() {
        return Err(DataError::InvalidFraction(train_fraction));
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn toy(labels: Vec<usize>, k: usize) -> Dataset {
        let n = labels.len();
        let features = Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64);
        let names = (0..k).map(|c| format!("c{c}")).collect();
        Dataset::new("toy", features, labels, names).unwrap()
    }

    #[test]
    fn load_reencodes_first_appearance() {
        let text = "a\tb\ttarget\n1\t2\tx\n3\t4\ty\n5\t6\tx\n";
        let ds = parse_dataset(text, "t", &LoadOptions::default()).unwrap();
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.class_names(), &["x".to_string(), "y".to_string()]);
        assert_eq!(ds.features(), array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
    }

    #[test]
    fn load_rejects_unparsable_cell() {
        let text = "a\ttarget\n1\tx\nfoo\ty\n";
        let err = parse_dataset(text, "t", &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, DataError::UnparsableCell { row: 2, .. }), "{err}");
        assert!(err.to_string().contains("unparsable cell"));
    }

    #[test]
    fn load_errors() {
        let opts = LoadOptions::default();
        assert!(matches!(
            parse_dataset("a\tlabel\n1\tx\n2\ty\n", "t", &opts),
            Err(DataError::MissingLabelColumn(_))
        ));
        assert!(matches!(
            parse_dataset("a\ttarget\n1\tx\n2\tx\n", "t", &opts),
            Err(DataError::TooFewClasses(1))
        ));
        assert!(matches!(
            parse_dataset("a\ttarget\n1\tx\n", "t", &opts),
            Err(DataError::TooFewInstances(1))
        ));
        assert!(matches!(
            load_dataset("/nonexistent/file.tsv", &opts),
            Err(DataError::Io { .. })
        ));
    }

    #[test]
    fn load_drops_rows_with_missing_values() {
        let text = "a,b,target\n1,2,x\n?,4,y\n5,,y\n7,8,y\n";
        let ds = parse_dataset(text, "t", &LoadOptions::csv()).unwrap();
        assert_eq!(ds.n_instances(), 2);
        assert_eq!(ds.labels(), &[0, 1]);
    }

    #[test]
    fn custom_label_column() {
        let text = "cls\tf\n0\t1.5\n1\t2.5\n";
        let opts = LoadOptions {
            label_column: "cls".into(),
            ..LoadOptions::default()
        };
        let ds = parse_dataset(text, "t", &opts).unwrap();
        assert_eq!(ds.n_features(), 1);
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.tsv");
        let ds = toy(vec![0, 1, 1, 0, 1], 2);
        write_dataset(&ds, &path, b'\t').unwrap();
        let back = load_dataset(&path, &LoadOptions::default()).unwrap();
        assert_eq!(back.features(), ds.features());
        assert_eq!(back.labels(), ds.labels());
        assert_eq!(back.name(), "toy");
    }

    #[test]
    fn standardize_examples() {
        let features = array![[1.0, 5.0], [3.0, 5.0]];
        let ds = Dataset::new("s", features, vec![0, 1], vec!["a".into(), "b".into()]).unwrap();
        let z = standardize(&ds);
        assert_eq!(z.features(), array![[-1.0, 0.0], [1.0, 0.0]]);
        let zz = standardize(&z);
        for (a, b) in z.features().iter().zip(zz.features().iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn imbalance_examples() {
        let haberman = ClassDistribution::from_proportions(vec![0.735, 0.265]);
        assert!((imbalance_index(&haberman) - 0.2209).abs() < 5e-4);
        let dis = ClassDistribution::from_proportions(vec![0.985, 0.015]);
        assert!((imbalance_index(&dis) - 0.9409).abs() < 5e-4);
        let even = ClassDistribution::from_proportions(vec![0.5, 0.5]);
        assert_eq!(imbalance_index(&even), 0.0);
    }

    #[test]
    fn multiclass_normalization() {
        // new_thyroid: 150 / 35 / 30 instances
        let thyroid = ClassDistribution::from_counts(vec![150, 35, 30]);
        assert!((imbalance_index(&thyroid) - 0.30).abs() < 5e-3);
        assert!((raw_imbalance_index(&thyroid) - 2.0 * imbalance_index(&thyroid)).abs() < 1e-12);
        // wine_quality_red: 6 classes
        let wine = ClassDistribution::from_counts(vec![10, 53, 681, 638, 199, 18]);
        assert!((imbalance_index(&wine) - 0.23).abs() < 5e-3);
        let single = ClassDistribution::from_counts(vec![0, 9, 0, 0]);
        assert!((imbalance_index(&single) - 1.0).abs() < 1e-12);
        let two = ClassDistribution::from_proportions(vec![0.8, 0.2]);
        assert_eq!(imbalance_index(&two), raw_imbalance_index(&two));
    }

    #[test]
    fn imbalance_tends_to_one() {
        let mut last = 0.0;
        for eps in [0.5, 0.1, 0.01, 1e-4, 1e-8] {
            let idx = imbalance_index(&ClassDistribution::from_proportions(vec![1.0 - eps, eps]));
            assert!(idx >= last);
            last = idx;
        }
        assert!((last - 1.0).abs() < 1e-6);
    }

    #[test]
    fn balance_boundary_is_strict() {
        assert_eq!(BalanceClass::from_index(0.22), BalanceClass::Imbalanced);
        assert_eq!(BalanceClass::from_index(0.08), BalanceClass::Balanced);
        assert_eq!(BalanceClass::from_index(0.20), BalanceClass::Balanced);
    }

    #[test]
    fn subsample_exact_products() {
        let mut labels = vec![0; 100];
        labels.extend(vec![1; 10]);
        let ds = toy(labels, 2);
        let spec = SubsampleSpec {
            fraction: 0.9,
            stratified: true,
            seed: 3,
        };
        let (idx, sub) = stratified_subsample(&ds, &spec).unwrap();
        assert_eq!(sub.class_distribution().counts, vec![90, 9]);
        let (again, _) = stratified_subsample(&ds, &spec).unwrap();
        assert_eq!(idx, again);
    }

    #[test]
    fn subsample_identity_at_full_fraction() {
        let ds = toy(vec![1, 0, 1, 0, 0], 2);
        let spec = SubsampleSpec {
            fraction: 1.0,
            stratified: true,
            seed: 11,
        };
        let (idx, sub) = stratified_subsample(&ds, &spec).unwrap();
        assert_eq!(idx, vec![0, 1, 2, 3, 4]);
        assert_eq!(sub, ds);
    }

    #[test]
    fn subsample_empty_class_is_error() {
        let mut labels = vec![0; 20];
        labels.push(1);
        let ds = toy(labels, 2);
        let spec = SubsampleSpec {
            fraction: 0.3,
            stratified: true,
            seed: 0,
        };
        assert!(matches!(
            stratified_subsample(&ds, &spec),
            Err(DataError::EmptyClass { class: 1, .. })
        ));
    }

    #[test]
    fn holdout_ten_instances() {
        let ds = toy(vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1], 2);
        let (train, test) = stratified_holdout_split(&ds, 0.9, 5).unwrap();
        assert_eq!((train.len(), test.len()), (9, 1));
        let counts = ClassDistribution::from_labels(
            &train.iter().map(|&i| ds.labels()[i]).collect::<Vec<_>>(),
            2,
        )
        .counts;
        assert!(counts.iter().all(|&c| c >= 4));
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(stratified_holdout_split(&ds, 0.9, 5).unwrap(), (train, test));
    }

    #[test]
    fn holdout_rejects_singleton_class() {
        let ds = toy(vec![0, 0, 0, 1], 2);
        assert!(matches!(
            stratified_holdout_split(&ds, 0.5, 0),
            Err(DataError::ClassTooSmall { class: 1, size: 1 })
        ));
    }

    proptest! {
        #[test]
        fn imbalance_is_permutation_invariant(mut counts in prop::collection::vec(1usize..50, 2..6), rot in 0usize..6) {
            let a = imbalance_index(&ClassDistribution::from_counts(counts.clone()));
            let r = rot % counts.len();
            counts.rotate_left(r);
            let b = imbalance_index(&ClassDistribution::from_counts(counts));
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        }

        #[test]
        fn stratified_counts_within_one(counts in prop::collection::vec(1usize..200, 1..6), fraction in 0.05f64..1.0) {
            let chosen = stratified_counts(&counts, fraction);
            for (&c, &n) in chosen.iter().zip(&counts) {
                prop_assert!((c as f64 - fraction * n as f64).abs() < 1.0);
            }
        }

        #[test]
        fn standardize_moments(values in prop::collection::vec(-1e3f64..1e3, 3..40)) {
            let n = values.len();
            let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
            let features = Array2::from_shape_vec((n, 1), values).unwrap();
            let ds = Dataset::new("p", features, labels, vec!["a".into(), "b".into()]).unwrap();
            let z = standardize(&ds);
            let col = z.features().column(0).to_owned();
            let mean = col.sum() / n as f64;
            prop_assert!(mean.abs() < 1e-9);
            let var = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
            prop_assert!(var.abs() < 1e-9 || (var - 1.0).abs() < 1e-9);
        }
    }
}
