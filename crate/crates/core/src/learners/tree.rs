use ndarray::ArrayView2;
use rand::seq::SliceRandom;

use super::{argmax_count, check_training, Classifier, Learner, LearnerError, LearnerKind, TrainedModel};
use crate::seed::SeededRng;

/// CART classifier with Gini impurity.
///
/// Splits are accepted whenever both children are nonempty, even without an
/// impurity gain, so an unlimited tree separates all distinct points. Ties
/// between candidate splits go to the lower feature, then the lower
/// threshold. Leaves predict their majority class (lowest id on ties).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecisionTree {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
}

impl DecisionTree {
    pub fn new(max_depth: Option<usize>) -> Self {
        Self { max_depth }
    }
}

impl Learner for DecisionTree {
    fn kind(&self) -> LearnerKind {
        LearnerKind::Tree
    }

    fn fit(&self, x: ArrayView2<f64>, y: &[usize], n_classes: usize, _seed: u64) -> Result<TrainedModel, LearnerError> {
        if let Some(class) = check_training(x, y, n_classes)? {
            return Ok(TrainedModel::constant(LearnerKind::Tree, n_classes, x.ncols(), class));
        }
        let indices: Vec<usize> = (0..x.nrows()).collect();
        let tree = grow(x, y, n_classes, indices, self.max_depth, None);
        Ok(TrainedModel::new(LearnerKind::Tree, n_classes, x.ncols(), Box::new(tree)))
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub(crate) fn predict_row(&self, row: ndarray::ArrayView1<f64>) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(class) => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

impl Classifier for Tree {
    fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>, LearnerError> {
        Ok(x.rows().into_iter().map(|r| self.predict_row(r)).collect())
    }
}

/// Feature sampling for forests: draw `max_features` candidates per node.
pub(crate) struct FeatureSampler<'a> {
    pub max_features: usize,
    pub rng: &'a mut SeededRng,
}

/// Grows a tree on the rows in `indices` (repeats allowed, for bootstraps).
pub(crate) fn grow(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
    indices: Vec<usize>,
    max_depth: Option<usize>,
    mut sampler: Option<FeatureSampler<'_>>,
) -> Tree {
    let mut nodes = Vec::new();
    // (node slot, rows, depth); slots are reserved before children are built
    let mut stack = vec![(0usize, indices, 0usize)];
    nodes.push(Node::Leaf(0));
    while let Some((slot, rows, depth)) = stack.pop() {
        let counts = class_counts(y, &rows, n_classes);
        let majority = argmax_count(&counts);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < 2 || max_depth.is_some_and(|m| depth >= m) {
            nodes[slot] = Node::Leaf(majority);
            continue;
        }
        let Some(split) = best_split(x, y, n_classes, &rows, sampler.as_mut()) else {
            nodes[slot] = Node::Leaf(majority);
            continue;
        };
        let (l_rows, r_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| x[[i, split.feature]] <= split.threshold);
        let (left, right) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf(majority));
        nodes.push(Node::Leaf(majority));
        nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        stack.push((right, r_rows, depth + 1));
        stack.push((left, l_rows, depth + 1));
    }
    Tree { nodes }
}

fn class_counts(y: &[usize], rows: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &i in rows {
        counts[y[i]] += 1;
    }
    counts
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

fn best_split(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
    rows: &[usize],
    sampler: Option<&mut FeatureSampler<'_>>,
) -> Option<Split> {
    let d = x.ncols();
    let Some(sampler) = sampler else {
        return best_over(x, y, n_classes, rows, 0..d);
    };
    // Draw a random subset; if none of it can split, keep drawing from the rest.
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(sampler.rng);
    let take = sampler.max_features.clamp(1, d);
    let mut first: Vec<usize> = order[..take].to_vec();
    first.sort_unstable();
    if let Some(split) = best_over(x, y, n_classes, rows, first) {
        return Some(split);
    }
    order[take..]
        .iter()
        .find_map(|&f| best_over(x, y, n_classes, rows, std::iter::once(f)))
}

fn best_over(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
    rows: &[usize],
    features: impl IntoIterator<Item = usize>,
) -> Option<Split> {
    let n = rows.len();
    let total = class_counts(y, rows, n_classes);
    let mut best: Option<Split> = None;
    let mut sorted = rows.to_vec();
    for f in features {
        sorted.sort_by(|&a, &b| x[[a, f]].total_cmp(&x[[b, f]]));
        let mut left = vec![0usize; n_classes];
        for pos in 0..n - 1 {
            left[y[sorted[pos]]] += 1;
            let (a, b) = (x[[sorted[pos], f]], x[[sorted[pos + 1], f]]);
            if a >= b {
                continue;
            }
            let nl = pos + 1;
            let nr = n - nl;
            let gl = gini(&left, nl, None);
            let gr = gini(&total, nr, Some(&left));
            let score = (nl as f64 * gl + nr as f64 * gr) / n as f64;
            if best.as_ref().is_none_or(|s| score < s.score - 1e-12) {
                let mid = a + (b - a) / 2.0;
                best = Some(Split {
                    feature: f,
                    threshold: if mid >= b { a } else { mid },
                    score,
                });
            }
        }
    }
    best
}

/// Gini impurity of `counts` (or of `counts - minus` when given) over `n` rows.
fn gini(counts: &[usize], n: usize, minus: Option<&[usize]>) -> f64 {
    let n = n as f64;
    let sum_sq: f64 = counts
        .iter()
        .enumerate()
        .map(|(c, &v)| {
            let v = (v - minus.map_or(0, |m| m[c])) as f64;
            v * v
        })
        .sum();
    1.0 - sum_sq / (n * n)
}
