use std::time::Instant;

use ndarray::Axis;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::data::{classify_balance, stratified_holdout_split, stratified_subsample, BalanceClass, Dataset, SubsampleSpec};
use crate::learners::{F1Average, Learner, MetricKind};
use crate::seed::mix_seed;
use crate::splitters::{materialize_folds, split, SplitterSpec};

/// Stream offsets keeping fit seeds apart from split seeds.
const FIT_STREAM: u64 = 0x6669_745f_7365_6564;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scoring {
    pub metric: MetricKind,
    pub average: F1Average,
}

impl Scoring {
    pub fn new(metric: MetricKind) -> Self {
        Self {
            metric,
            average: F1Average::Macro,
        }
    }
}

/// Accuracy for balanced datasets, F1 for imbalanced ones, unless overridden.
pub fn select_metric(ds: &Dataset, metric_override: Option<MetricKind>) -> MetricKind {
    metric_override.unwrap_or(match classify_balance(ds) {
        BalanceClass::Balanced => MetricKind::Accuracy,
        BalanceClass::Imbalanced => MetricKind::F1,
    })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (`n − 1` denominator); 0 for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

fn score_split(
    ds: &Dataset,
    learner: &dyn Learner,
    train: &[usize],
    test: &[usize],
    seed: u64,
    scoring: Scoring,
) -> Result<f64, HarnessError> {
    let x = ds.features();
    let y_train: Vec<usize> = train.iter().map(|&i| ds.labels()[i]).collect();
    let y_test: Vec<usize> = test.iter().map(|&i| ds.labels()[i]).collect();
    let model = learner.fit(x.select(Axis(0), train).view(), &y_train, ds.n_classes(), seed)?;
    let pred = model.predict(x.select(Axis(0), test).view())?;
    Ok(scoring.metric.score(&y_test, &pred, ds.n_classes(), scoring.average)?)
}

/// Mean score over `reps` stratified holdouts (train on `train_fraction`,
/// score on the complement). Rep `r` splits with `mix_seed(seed, r)`.
pub fn estimate_true_performance(
    ds: &Dataset,
    learner: &dyn Learner,
    reps: usize,
    train_fraction: f64,
    seed: u64,
    scoring: Scoring,
) -> Result<f64, HarnessError> {
    if reps == 0 {
        return Err(HarnessError::Config("holdout repetitions must be at least 1".into()));
    }
    let mut total = 0.0;
    for r in 0..reps as u64 {
        let (train, test) = stratified_holdout_split(ds, train_fraction, mix_seed(seed, r))?;
        total += score_split(ds, learner, &train, &test, mix_seed(seed ^ FIT_STREAM, r), scoring)?;
    }
    Ok(total / reps as f64)
}

/// Outcome of one complete cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub struct CvRun {
    pub score: f64,
    pub fold_scores: Vec<f64>,
    /// Fold construction through the last fold's scoring.
    pub seconds: f64,
    /// Training and scoring only, summed over folds.
    pub fold_seconds: f64,
}

/// Builds folds with `spec`, then trains and scores on each; fold `j` is fit
/// with `mix_seed(fit_seed, j)`. Returns the mean fold score.
pub fn run_cv_once(
    ds: &Dataset,
    learner: &dyn Learner,
    spec: &SplitterSpec,
    fit_seed: u64,
    scoring: Scoring,
) -> Result<CvRun, HarnessError> {
    let start = Instant::now();
    let folds = materialize_folds(&split(ds, spec)?);
    let mut fold_scores = Vec::with_capacity(folds.len());
    let mut fold_seconds = 0.0;
    for (j, (train, test)) in folds.iter().enumerate() {
        let t = Instant::now();
        fold_scores.push(score_split(ds, learner, train, test, mix_seed(fit_seed, j as u64), scoring)?);
        fold_seconds += t.elapsed().as_secs_f64();
    }
    // A clock that cannot resolve the interval still reports one tick.
    let seconds = start.elapsed().as_secs_f64().max(1e-9).max(fold_seconds);
    Ok(CvRun {
        score: mean(&fold_scores),
        fold_scores,
        seconds,
        fold_seconds,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvSummary {
    pub cv_estimates: Vec<f64>,
    pub cv_mean: f64,
    pub std: f64,
    pub wall_seconds: Vec<f64>,
    pub fold_seconds: Vec<f64>,
}

/// Cross-validates `cv_reps` stratified subsamples of `ds`.
///
/// Subsample `i` is drawn with seed `subsample_seed + i`, so cells sharing
/// `subsample_seed` see the same subsamples. Split and fit seeds for rep `i`
/// are derived from `spec.seed`.
pub fn expected_cv_estimate(
    ds: &Dataset,
    learner: &dyn Learner,
    spec: &SplitterSpec,
    cv_reps: usize,
    train_fraction: f64,
    subsample_seed: u64,
    scoring: Scoring,
) -> Result<CvSummary, HarnessError> {
    if cv_reps < 2 {
        return Err(HarnessError::Config("cv_reps must be at least 2".into()));
    }
    let mut summary = CvSummary {
        cv_estimates: Vec::with_capacity(cv_reps),
        cv_mean: 0.0,
        std: 0.0,
        wall_seconds: Vec::with_capacity(cv_reps),
        fold_seconds: Vec::with_capacity(cv_reps),
    };
    for i in 0..cv_reps as u64 {
        let sub_spec = SubsampleSpec {
            fraction: train_fraction,
            stratified: true,
            seed: subsample_seed.wrapping_add(i),
        };
        let (_, sub) = stratified_subsample(ds, &sub_spec)?;
        let mut rep_spec = spec.clone();
        rep_spec.seed = mix_seed(spec.seed, i);
        let run = run_cv_once(&sub, learner, &rep_spec, mix_seed(spec.seed ^ FIT_STREAM, i), scoring)?;
        summary.cv_estimates.push(run.score);
        summary.wall_seconds.push(run.seconds);
        summary.fold_seconds.push(run.fold_seconds);
    }
    summary.cv_mean = mean(&summary.cv_estimates);
    summary.std = sample_std(&summary.cv_estimates);
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{LearnerError, LearnerKind, LearnerSpec, OracleLearner, TrainedModel};
    use crate::splitters::{ClusterParams, SplitterKind};
    use crate::synth::{generate, SynthSpec};
    use ndarray::{Array2, ArrayView2};

    /// Always predicts class 0.
    struct Zero;

    impl Learner for Zero {
        fn kind(&self) -> LearnerKind {
            LearnerKind::Tree
        }
        fn fit(&self, x: ArrayView2<f64>, _: &[usize], k: usize, _: u64) -> Result<TrainedModel, LearnerError> {
            Ok(TrainedModel::constant(LearnerKind::Tree, k, x.ncols(), 0))
        }
    }

    fn balanced_pairs(n_per_class: usize) -> Dataset {
        let n = 2 * n_per_class;
        let x = Array2::from_shape_fn((n, 2), |(i, j)| (i * 3 + j) as f64);
        let labels = (0..n).map(|i| i % 2).collect();
        Dataset::new("pairs", x, labels, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn constant_predictor_scores_exactly_half() {
        let ds = balanced_pairs(10);
        let p = estimate_true_performance(&ds, &Zero, 25, 0.9, 3, Scoring::new(MetricKind::Accuracy)).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn single_rep_equals_one_holdout() {
        let ds = generate(&SynthSpec::balanced("b", 80, 3, 2)).unwrap();
        let learner = LearnerSpec::new(LearnerKind::Tree).with("max_depth", 3.0).build(None).unwrap();
        let s = Scoring::new(MetricKind::Accuracy);
        let p = estimate_true_performance(&ds, learner.as_ref(), 1, 0.9, 77, s).unwrap();
        let (train, test) = stratified_holdout_split(&ds, 0.9, mix_seed(77, 0)).unwrap();
        let direct = score_split(&ds, learner.as_ref(), &train, &test, mix_seed(77 ^ FIT_STREAM, 0), s).unwrap();
        assert_eq!(p, direct);
    }

    #[test]
    fn oracle_is_perfect_everywhere() {
        let ds = generate(&SynthSpec::imbalanced("i", 90, 3, 5)).unwrap();
        let oracle = OracleLearner::from_dataset(&ds);
        let s = Scoring::new(select_metric(&ds, None));
        assert_eq!(s.metric, MetricKind::F1);
        assert_eq!(estimate_true_performance(&ds, &oracle, 10, 0.9, 1, s).unwrap(), 1.0);
        for kind in [SplitterKind::Kfold, SplitterKind::Scv, SplitterKind::Kcbcv, SplitterKind::Dobscv] {
            let mut spec = SplitterSpec::new(kind, 10, 4);
            if kind == SplitterKind::Kcbcv {
                spec.cluster_params = Some(ClusterParams::Kmeans { k_clusters: 3, batch_size: 1024 });
            }
            let run = run_cv_once(&ds, &oracle, &spec, 0, s).unwrap();
            assert_eq!(run.score, 1.0);
            assert!(run.seconds > 0.0 && run.seconds.is_finite());
            assert!(run.fold_seconds <= run.seconds);
        }
    }

    #[test]
    fn two_point_statistics() {
        assert!((mean(&[0.6, 0.8]) - 0.7).abs() < 1e-12);
        assert!((sample_std(&[0.6, 0.8]) - 0.141_421_356).abs() < 1e-4);
        assert_eq!(sample_std(&[0.3; 5]), 0.0);
    }

    #[test]
    fn expected_estimate_matches_its_estimates() {
        let ds = generate(&SynthSpec::balanced("b", 60, 2, 8)).unwrap();
        let learner = LearnerSpec::new(LearnerKind::Forest)
            .with("n_trees", 5.0)
            .build(None)
            .unwrap();
        let spec = SplitterSpec::new(SplitterKind::Scv, 2, 9);
        let s = Scoring::new(MetricKind::Accuracy);
        let out = expected_cv_estimate(&ds, learner.as_ref(), &spec, 6, 0.9, 100, s).unwrap();
        assert_eq!(out.cv_estimates.len(), 6);
        assert!((out.cv_mean - mean(&out.cv_estimates)).abs() < 1e-12);
        assert!((out.std - sample_std(&out.cv_estimates)).abs() < 1e-12);
        assert!(out.cv_estimates.iter().all(|v| (0.0..=1.0).contains(v)));
        let again = expected_cv_estimate(&ds, learner.as_ref(), &spec, 6, 0.9, 100, s).unwrap();
        assert_eq!(again.cv_estimates, out.cv_estimates);
    }

    #[test]
    fn constant_estimates_have_zero_std() {
        let ds = balanced_pairs(20);
        let spec = SplitterSpec::new(SplitterKind::Scv, 2, 0);
        let out = expected_cv_estimate(&ds, &Zero, &spec, 4, 0.9, 0, Scoring::new(MetricKind::Accuracy)).unwrap();
        assert!(out.cv_estimates.iter().all(|&v| v == 0.5));
        assert_eq!(out.std, 0.0);
    }
}
