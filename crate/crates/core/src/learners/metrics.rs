//! Confusion tallies and the scores derived from them.

use serde::{Deserialize, Serialize};

use super::LearnerError;

/// One-vs-rest tallies per class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: Vec<usize>,
    pub fp: Vec<usize>,
    pub fn_: Vec<usize>,
    pub tn: Vec<usize>,
    pub n_eval: usize,
    pub correct: usize,
}

impl ConfusionCounts {
    pub fn n_classes(&self) -> usize {
        self.tp.len()
    }

    /// Instances of `class` in the ground truth.
    pub fn support(&self, class: usize) -> usize {
        self.tp[class] + self.fn_[class]
    }

    /// TP/(TP+FP), 0 when nothing was predicted as `class`.
    pub fn precision(&self, class: usize) -> f64 {
        ratio(self.tp[class], self.tp[class] + self.fp[class])
    }

    /// TP/(TP+FN), 0 when `class` is absent from the truth.
    pub fn recall(&self, class: usize) -> f64 {
        ratio(self.tp[class], self.support(class))
    }

    /// Harmonic mean of precision and recall, 0 when both are 0.
    ///
    /// A class that appears neither in the truth nor in the predictions has
    /// nothing to get wrong and scores 1.
    pub fn f1(&self, class: usize) -> f64 {
        if self.tp[class] + self.fp[class] + self.fn_[class] == 0 {
            return 1.0;
        }
        let (p, r) = (self.precision(class), self.recall(class));
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    /// Whether `class` occurs in the truth or the predictions.
    pub fn is_observed(&self, class: usize) -> bool {
        self.tp[class] + self.fp[class] + self.fn_[class] > 0
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<ConfusionCounts, LearnerError> {
    if y_true.len() != y_pred.len() {
        return Err(LearnerError::LengthMismatch {
            truth: y_true.len(),
            pred: y_pred.len(),
        });
    }
    let mut cc = ConfusionCounts {
        tp: vec![0; n_classes],
        fp: vec![0; n_classes],
        fn_: vec![0; n_classes],
        tn: vec![0; n_classes],
        n_eval: y_true.len(),
        correct: 0,
    };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if let Some(&bad) = [t, p].iter().find(|&&l| l >= n_classes) {
            return Err(LearnerError::LabelOutOfRange { label: bad, n_classes });
        }
        if t == p {
            cc.tp[t] += 1;
            cc.correct += 1;
        } else {
            cc.fn_[t] += 1;
            cc.fp[p] += 1;
        }
    }
    for c in 0..n_classes {
        cc.tn[c] = cc.n_eval - cc.tp[c] - cc.fp[c] - cc.fn_[c];
    }
    Ok(cc)
}

/// Correct predictions over total; 0 for an empty evaluation.
pub fn accuracy(cc: &ConfusionCounts) -> f64 {
    ratio(cc.correct, cc.n_eval)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F1Average {
    /// Unweighted mean over classes seen in truth or predictions.
    #[default]
    Macro,
    /// Support-weighted mean over classes present in the truth.
    Weighted,
}

/// Binary: F1 of class 1. Multiclass: averaged per `average`.
pub fn f1_score_with(cc: &ConfusionCounts, average: F1Average) -> f64 {
    let k = cc.n_classes();
    if k == 2 {
        return cc.f1(1);
    }
    match average {
        F1Average::Macro => {
            let observed: Vec<usize> = (0..k).filter(|&c| cc.is_observed(c)).collect();
            if observed.is_empty() {
                return 1.0;
            }
            observed.iter().map(|&c| cc.f1(c)).sum::<f64>() / observed.len() as f64
        }
        F1Average::Weighted => {
            let total: usize = (0..k).map(|c| cc.support(c)).sum();
            if total == 0 {
                return 1.0;
            }
            (0..k).map(|c| cc.f1(c) * cc.support(c) as f64).sum::<f64>() / total as f64
        }
    }
}

pub fn f1_score(cc: &ConfusionCounts) -> f64 {
    f1_score_with(cc, F1Average::Macro)
}

/// Mean per-class recall. Every class must be present in the truth.
pub fn balanced_accuracy(cc: &ConfusionCounts) -> Result<f64, LearnerError> {
    if let Some(c) = (0..cc.n_classes()).find(|&c| cc.support(c) == 0) {
        return Err(LearnerError::AbsentClass(c));
    }
    Ok(mean_recall_present(cc))
}

/// Mean recall over the classes that do occur in the truth.
pub fn mean_recall_present(cc: &ConfusionCounts) -> f64 {
    let present: Vec<usize> = (0..cc.n_classes()).filter(|&c| cc.support(c) > 0).collect();
    if present.is_empty() {
        return 0.0;
    }
    present.iter().map(|&c| cc.recall(c)).sum::<f64>() / present.len() as f64
}

/// Score used to compare a fold's predictions against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    F1,
    BalancedAccuracy,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::F1 => "f1",
            MetricKind::BalancedAccuracy => "balanced_accuracy",
        }
    }

    /// Scores predictions. Balanced accuracy falls back to the mean recall
    /// over present classes when a class is missing from `y_true`.
    pub fn score(
        self,
        y_true: &[usize],
        y_pred: &[usize],
        n_classes: usize,
        average: F1Average,
    ) -> Result<f64, LearnerError> {
        let cc = confusion(y_true, y_pred, n_classes)?;
        Ok(match self {
            MetricKind::Accuracy => accuracy(&cc),
            MetricKind::F1 => f1_score_with(&cc, average),
            MetricKind::BalancedAccuracy => mean_recall_present(&cc),
        })
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "accuracy" => Ok(MetricKind::Accuracy),
            "f1" => Ok(MetricKind::F1),
            "balanced_accuracy" => Ok(MetricKind::BalancedAccuracy),
            other => Err(format!("unknown metric '{other}'")),
        }
    }
}
