use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use super::{check_training, Classifier, Learner, LearnerError, LearnerKind, TrainedModel};

pub const LOGREG_LEARNING_RATE: f64 = 0.1;
pub const LOGREG_EPOCHS: usize = 500;

/// Multinomial logistic regression fitted by full-batch gradient descent.
///
/// Minimizes `Σ cross-entropy + ‖W‖² / (2C)` (bias unpenalized), scaled by
/// `1/n` for the descent. The step is `min(0.1, 1/L)` with `L` an upper
/// bound on the gradient's Lipschitz constant, so the loss never increases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticRegression {
    pub c: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl LogisticRegression {
    pub fn new(c: f64) -> Self {
        Self {
            c,
            epochs: LOGREG_EPOCHS,
            learning_rate: LOGREG_LEARNING_RATE,
        }
    }

    /// Like [`Learner::fit`], reporting `(epoch, loss)` before every step and
    /// once more after the last one.
    pub fn fit_traced(
        &self,
        x: ArrayView2<f64>,
        y: &[usize],
        n_classes: usize,
        trace: &mut dyn FnMut(usize, f64),
    ) -> Result<TrainedModel, LearnerError> {
        if let Some(class) = check_training(x, y, n_classes)? {
            return Ok(TrainedModel::constant(LearnerKind::Logreg, n_classes, x.ncols(), class));
        }
        let (n, d) = x.dim();
        // Train only over classes present, so predictions stay within them.
        let mut seen = vec![false; n_classes];
        for &l in y {
            seen[l] = true;
        }
        let classes: Vec<usize> = (0..n_classes).filter(|&c| seen[c]).collect();
        let mut local = vec![0; n_classes];
        for (j, &c) in classes.iter().enumerate() {
            local[c] = j;
        }
        let m = classes.len();

        let xb = with_bias(x);
        let mut onehot = Array2::<f64>::zeros((n, m));
        for (i, &l) in y.iter().enumerate() {
            onehot[[i, local[l]]] = 1.0;
        }
        let lambda = 1.0 / (self.c * n as f64);
        let mean_sq_norm = xb.rows().into_iter().map(|r| r.dot(&r)).sum::<f64>() / n as f64;
        let lipschitz = 0.5 * mean_sq_norm + lambda;
        let step = self.learning_rate.min(1.0 / lipschitz);

        let mut w = Array2::<f64>::zeros((d + 1, m));
        for epoch in 0..self.epochs {
            let probs = softmax(&xb.dot(&w));
            trace(epoch, loss(&probs, &onehot, &w, lambda));
            let mut grad = xb.t().dot(&(&probs - &onehot)) / n as f64;
            {
                let mut g = grad.slice_mut(s![..d, ..]);
                g.scaled_add(lambda, &w.slice(s![..d, ..]));
            }
            w.scaled_add(-step, &grad);
        }
        let probs = softmax(&xb.dot(&w));
        trace(self.epochs, loss(&probs, &onehot, &w, lambda));

        Ok(TrainedModel::new(
            LearnerKind::Logreg,
            n_classes,
            d,
            Box::new(LogregModel { weights: w, classes }),
        ))
    }
}

impl Learner for LogisticRegression {
    fn kind(&self) -> LearnerKind {
        LearnerKind::Logreg
    }

    fn fit(&self, x: ArrayView2<f64>, y: &[usize], n_classes: usize, _seed: u64) -> Result<TrainedModel, LearnerError> {
        self.fit_traced(x, y, n_classes, &mut |_, _| {})
    }
}

fn with_bias(x: ArrayView2<f64>) -> Array2<f64> {
    let (n, d) = x.dim();
    let mut xb = Array2::<f64>::ones((n, d + 1));
    xb.slice_mut(s![.., ..d]).assign(&x);
    xb
}

fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    p
}

fn loss(probs: &Array2<f64>, onehot: &Array2<f64>, w: &Array2<f64>, lambda: f64) -> f64 {
    let n = probs.nrows() as f64;
    let ce: f64 = probs
        .iter()
        .zip(onehot)
        .filter(|(_, &t)| t > 0.0)
        .map(|(&p, _)| -p.max(1e-300).ln())
        .sum();
    let d = w.nrows() - 1;
    let penalty: f64 = w.slice(s![..d, ..]).iter().map(|v| v * v).sum();
    ce / n + 0.5 * lambda * penalty
}

#[derive(Debug)]
struct LogregModel {
    weights: Array2<f64>,
    classes: Vec<usize>,
}

impl LogregModel {
    fn scores(&self, x: ArrayView2<f64>) -> Array2<f64> {
        with_bias(x).dot(&self.weights)
    }
}

impl Classifier for LogregModel {
    fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>, LearnerError> {
        Ok(self
            .scores(x)
            .axis_iter(Axis(0))
            .map(|row| self.classes[first_argmax(row.to_owned())])
            .collect())
    }
}

/// Position of the largest score; the lowest position wins ties.
fn first_argmax(row: Array1<f64>) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    best
}
