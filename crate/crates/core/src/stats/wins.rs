use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::harness::EvalRecord;

/// Criterion for the best splitter in a comparison row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WinMeasure {
    /// Bias closest to zero.
    #[default]
    AbsBias,
    /// Smallest signed bias (most pessimistic estimate).
    SignedBias,
    /// Smallest standard deviation.
    Std,
}

impl WinMeasure {
    fn score(self, r: &EvalRecord) -> f64 {
        match self {
            WinMeasure::AbsBias => r.bias.abs(),
            WinMeasure::SignedBias => r.bias,
            WinMeasure::Std => r.std,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WinMeasure::AbsBias => "abs_bias",
            WinMeasure::SignedBias => "signed_bias",
            WinMeasure::Std => "std",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinTable {
    pub measure: WinMeasure,
    /// Wins per splitter id; every splitter seen appears, possibly with 0.
    pub counts: BTreeMap<String, usize>,
    /// Complete (dataset, learner, k) rows compared.
    pub rows: usize,
    /// Rows skipped because a splitter was missing.
    pub incomplete_rows: usize,
}

/// Counts, over (dataset, learner, k) rows, which splitter scores best.
/// Every splitter tied for best earns a win.
pub fn win_counts(records: &[EvalRecord], measure: WinMeasure) -> Result<WinTable, StatsError> {
    let splitters: BTreeSet<&str> = records.iter().map(|r| r.splitter.as_str()).collect();
    let mut rows: BTreeMap<(&str, &str, usize), BTreeMap<&str, f64>> = BTreeMap::new();
    for r in records {
        rows.entry((&r.dataset, &r.learner, r.k_splits)).or_default().insert(&r.splitter, measure.score(r));
    }
    let mut counts: BTreeMap<String, usize> = splitters.iter().map(|s| (s.to_string(), 0)).collect();
    let (mut complete, mut incomplete) = (0, 0);
    for row in rows.values() {
        if row.len() != splitters.len() || row.values().any(|v| !v.is_finite()) {
            incomplete += 1;
            continue;
        }
        complete += 1;
        let best = row.values().copied().fold(f64::INFINITY, f64::min);
        for (s, _) in row.iter().filter(|(_, &v)| v == best) {
            *counts.get_mut(*s).expect("splitter listed") += 1;
        }
    }
    if complete == 0 {
        return Err(StatsError::EmptyGrid);
    }
    Ok(WinTable { measure, counts, rows: complete, incomplete_rows: incomplete })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::test_util::record;
    use crate::SplitterKind::{self, *};
    use proptest::prelude::*;

    #[test]
    fn argmin_of_absolute_bias() {
        let recs = vec![record("d", "tree", Scv, 2, -0.01, 0.2), record("d", "tree", Kfold, 2, 0.05, 0.1)];
        let t = win_counts(&recs, WinMeasure::AbsBias).unwrap();
        assert_eq!(t.counts["scv"], 1);
        assert_eq!(t.counts["kfold"], 0);
        let s = win_counts(&recs, WinMeasure::Std).unwrap();
        assert_eq!((s.counts["scv"], s.counts["kfold"]), (0, 1));
        let signed = win_counts(&recs, WinMeasure::SignedBias).unwrap();
        assert_eq!(signed.counts["scv"], 1);
    }

    #[test]
    fn ties_award_every_tied_splitter() {
        let recs = vec![
            record("d", "tree", Scv, 2, 0.02, 0.0),
            record("d", "tree", Kfold, 2, -0.02, 0.0),
            record("d", "tree", Dbscv, 2, 0.03, 0.0),
        ];
        let t = win_counts(&recs, WinMeasure::AbsBias).unwrap();
        assert_eq!((t.counts["scv"], t.counts["kfold"], t.counts["dbscv"]), (1, 1, 0));
    }

    #[test]
    fn twenty_dataset_grid_accounting() {
        // 20 datasets x 4 learners, two k values, four splitters
        let kinds = [Scv, Kfold, Scbcv, Dobscv];
        let mut recs = Vec::new();
        for d in 0..20 {
            for l in ["a", "b", "c", "e"] {
                for k in [2, 10] {
                    for (i, &s) in kinds.iter().enumerate() {
                        let bias = ((d * 7 + i * 3 + k) % 5) as f64 / 100.0;
                        recs.push(record(&format!("d{d}"), l, s, k, bias, bias));
                    }
                }
            }
        }
        let t = win_counts(&recs, WinMeasure::AbsBias).unwrap();
        assert_eq!(t.rows, 160);
        assert!(t.counts.values().sum::<usize>() >= t.rows);
    }

    #[test]
    fn incomplete_rows_are_skipped_and_empty_is_error() {
        let recs = vec![
            record("d", "tree", Scv, 2, 0.1, 0.0),
            record("d", "tree", Kfold, 2, 0.2, 0.0),
            record("e", "tree", Scv, 2, 0.0, 0.0),
        ];
        let t = win_counts(&recs, WinMeasure::AbsBias).unwrap();
        assert_eq!((t.rows, t.incomplete_rows, t.counts["scv"]), (1, 1, 1));
        assert!(matches!(win_counts(&[], WinMeasure::AbsBias), Err(StatsError::EmptyGrid)));
    }

    proptest! {
        #[test]
        fn scale_invariant_per_row(
            biases in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 1..6),
            scales in proptest::collection::vec(0.01f64..100.0, 6),
        ) {
            let kinds: [SplitterKind; 3] = [Scv, Kfold, Dbscv];
            let build = |scale: &dyn Fn(usize) -> f64| -> Vec<EvalRecord> {
                biases.iter().enumerate().flat_map(|(row, b)| {
                    kinds.iter().zip(b).map(move |(&s, &v)| record(&format!("d{row}"), "t", s, 2, v * scale(row), 0.0))
                    .collect::<Vec<_>>()
                }).collect()
            };
            let a = win_counts(&build(&|_| 1.0), WinMeasure::AbsBias).unwrap();
            let b = win_counts(&build(&|row| scales[row]), WinMeasure::AbsBias).unwrap();
            prop_assert_eq!(a.counts, b.counts);
        }
    }
}
