//! Analysis tables over a results set, written as tidy CSV.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{friedman_test, uses_kmeans, win_counts, BlockBy, BlockTable, Measure, PValueMethod, StatsError, WinMeasure};
use crate::data::BalanceClass;
use crate::harness::EvalRecord;
use crate::SplitterKind;

pub const FRIEDMAN_FILE: &str = "friedman.csv";
pub const WINS_FILE: &str = "wins.csv";
pub const DISTRIBUTIONS_FILE: &str = "distributions.csv";
pub const TIME_FILE: &str = "time_summary.csv";
pub const ANALYSIS_FILES: [&str; 4] = [FRIEDMAN_FILE, WINS_FILE, DISTRIBUTIONS_FILE, TIME_FILE];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub block_by: BlockBy,
    /// Measure used for the bias Friedman test; std is always tested too.
    pub bias_measure: Measure,
    pub p_value: PValueMethod,
}

/// One Friedman test per (balance, k, measure). Groups with fewer than two
/// complete blocks carry no statistic and a note instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanRow {
    pub balance: BalanceClass,
    pub k_splits: usize,
    pub measure: Measure,
    pub n_blocks: usize,
    pub n_treatments: usize,
    pub dropped_blocks: usize,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub method: Option<PValueMethod>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRow {
    /// `balanced`, `imbalanced` or `all`.
    pub group: String,
    pub measure: WinMeasure,
    pub splitter: String,
    pub wins: usize,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub dataset: String,
    pub learner: String,
    pub balance: BalanceClass,
    pub k_splits: usize,
    pub splitter: String,
    pub splitter_kind: SplitterKind,
    pub measure: Measure,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRow {
    pub splitter: String,
    pub splitter_kind: SplitterKind,
    pub records: usize,
    pub runs: usize,
    pub total_seconds: f64,
    pub mean_seconds: f64,
    /// 1 = fastest mean run time among all splitters.
    pub rank: usize,
    /// Rank among K-Means-based splitters only.
    pub kmeans_rank: Option<usize>,
    /// False if any contributing record was timed with parallel workers.
    pub serial_timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub friedman: Vec<FriedmanRow>,
    pub wins: Vec<WinRow>,
    pub distributions: Vec<DistributionRow>,
    pub time: Vec<TimeRow>,
}

pub fn friedman_rows(records: &[EvalRecord], opts: &AnalysisOptions) -> Result<Vec<FriedmanRow>, StatsError> {
    let n_treatments = records.iter().map(|r| &r.splitter).collect::<BTreeSet<_>>().len();
    if n_treatments < 2 {
        return Err(StatsError::TooFewTreatments(n_treatments));
    }
    let mut groups: BTreeMap<(BalanceClass, usize), Vec<EvalRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.balance, r.k_splits)).or_default().push(r.clone());
    }
    let mut out = Vec::new();
    for ((balance, k_splits), recs) in groups {
        for measure in [opts.bias_measure, Measure::Std] {
            let (table, dropped) = BlockTable::from_records(&recs, measure, opts.block_by);
            let mut row = FriedmanRow {
                balance,
                k_splits,
                measure,
                n_blocks: table.n_blocks(),
                n_treatments: table.n_treatments(),
                dropped_blocks: dropped,
                statistic: None,
                p_value: None,
                method: None,
                note: String::new(),
            };
            match friedman_test(&table, opts.p_value) {
                Ok(res) => {
                    row.statistic = Some(res.statistic);
                    row.p_value = Some(res.p_value);
                    row.method = Some(res.method);
                }
                Err(e) => row.note = e.to_string(),
            }
            out.push(row);
        }
    }
    Ok(out)
}

fn win_rows(records: &[EvalRecord]) -> Result<Vec<WinRow>, StatsError> {
    let mut out = Vec::new();
    let mut groups: Vec<(String, Vec<EvalRecord>)> = vec![("all".into(), records.to_vec())];
    for balance in [BalanceClass::Balanced, BalanceClass::Imbalanced] {
        let recs: Vec<EvalRecord> = records.iter().filter(|r| r.balance == balance).cloned().collect();
        if !recs.is_empty() {
            groups.push((balance.to_string(), recs));
        }
    }
    for (group, recs) in groups {
        for measure in [WinMeasure::AbsBias, WinMeasure::Std] {
            let table = match win_counts(&recs, measure) {
                Ok(t) => t,
                // a balance group with no complete rows is simply absent
                Err(StatsError::EmptyGrid) if group != "all" => continue,
                Err(e) => return Err(e),
            };
            out.extend(table.counts.into_iter().map(|(splitter, wins)| WinRow {
                group: group.clone(),
                measure,
                splitter,
                wins,
                rows: table.rows,
            }));
        }
    }
    Ok(out)
}

/// Long-format bias and std per record, for box plots.
pub fn distribution_rows(records: &[EvalRecord]) -> Vec<DistributionRow> {
    records
        .iter()
        .flat_map(|r| {
            [Measure::Bias, Measure::Std].map(|measure| DistributionRow {
                dataset: r.dataset.clone(),
                learner: r.learner.clone(),
                balance: r.balance,
                k_splits: r.k_splits,
                splitter: r.splitter.clone(),
                splitter_kind: r.splitter_kind,
                measure,
                value: measure.of(r),
            })
        })
        .collect()
}

/// Wall-clock totals per splitter, ranked by mean seconds per CV run.
pub fn time_summary(records: &[EvalRecord]) -> Vec<TimeRow> {
    let mut by_splitter: BTreeMap<&str, TimeRow> = BTreeMap::new();
    for r in records {
        let row = by_splitter.entry(&r.splitter).or_insert_with(|| TimeRow {
            splitter: r.splitter.clone(),
            splitter_kind: r.splitter_kind,
            records: 0,
            runs: 0,
            total_seconds: 0.0,
            mean_seconds: 0.0,
            rank: 0,
            kmeans_rank: None,
            serial_timing: true,
        });
        row.records += 1;
        row.runs += r.wall_seconds.len();
        row.total_seconds += r.wall_seconds.iter().sum::<f64>();
        row.serial_timing &= r.serial_timing;
    }
    let mut rows: Vec<TimeRow> = by_splitter.into_values().collect();
    for row in &mut rows {
        row.mean_seconds = if row.runs > 0 { row.total_seconds / row.runs as f64 } else { 0.0 };
    }
    rows.sort_by(|a, b| a.mean_seconds.total_cmp(&b.mean_seconds).then_with(|| a.splitter.cmp(&b.splitter)));
    let mut kmeans_rank = 0;
    for (i, row) in rows.iter_mut().enumerate() {
        row.rank = i + 1;
        if uses_kmeans(row.splitter_kind) {
            kmeans_rank += 1;
            row.kmeans_rank = Some(kmeans_rank);
        }
    }
    rows
}

pub fn analyze_records(records: &[EvalRecord], opts: &AnalysisOptions) -> Result<AnalysisReport, StatsError> {
    if records.is_empty() {
        return Err(StatsError::EmptyGrid);
    }
    Ok(AnalysisReport {
        friedman: friedman_rows(records, opts)?,
        wins: win_rows(records)?,
        distributions: distribution_rows(records),
        time: time_summary(records),
    })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), StatsError> {
    let io = |e: csv::Error| StatsError::Io { path: path.display().to_string(), message: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush().map_err(|e| io(e.into()))
}

/// Writes the four analysis CSVs into `dir`.
pub fn write_analysis(dir: &Path, report: &AnalysisReport) -> Result<(), StatsError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| StatsError::Io { path: dir.display().to_string(), message: e.to_string() })?;
    write_csv(&dir.join(FRIEDMAN_FILE), &report.friedman)?;
    write_csv(&dir.join(WINS_FILE), &report.wins)?;
    write_csv(&dir.join(DISTRIBUTIONS_FILE), &report.distributions)?;
    write_csv(&dir.join(TIME_FILE), &report.time)
}
