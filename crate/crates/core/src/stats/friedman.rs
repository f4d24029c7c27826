use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::gamma::chi_square_sf;
use super::{BlockTable, StatsError};

/// How the p-value is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    /// Exact permutation distribution when it is cheap to enumerate,
    /// chi-square approximation otherwise.
    #[default]
    Auto,
    ChiSquare,
    /// Exact permutation distribution; fails if too large to enumerate.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_blocks: usize,
    pub n_treatments: usize,
    /// `Exact` or `ChiSquare`: the path actually used.
    pub method: PValueMethod,
}

/// Work budget (state × permutation updates) for exact enumeration.
const EXACT_BUDGET: usize = 20_000_000;

/// Average ranks (1-based) of one row; tied values share their mean rank.
pub fn average_ranks(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut ranks = vec![0.0; row.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && row[order[j + 1]] == row[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Tie-corrected statistic from per-row ranks; `None` when every row is
/// entirely tied (the statistic is undefined and taken as 0).
fn statistic(ranks: &[Vec<f64>], k: usize) -> Option<f64> {
    let n = ranks.len() as f64;
    let kf = k as f64;
    let mut col = vec![0.0; k];
    for row in ranks {
        for (c, r) in col.iter_mut().zip(row) {
            *c += r;
        }
    }
    let ties: f64 = ranks.iter().map(|row| tie_term(row)).sum();
    let denom = 1.0 - ties / (n * kf * (kf * kf - 1.0));
    if denom <= 1e-12 {
        return None;
    }
    let mean_rank = (kf + 1.0) / 2.0;
    let ss: f64 = col.iter().map(|&r| (r / n - mean_rank).powi(2)).sum();
    Some(12.0 * n / (kf * (kf + 1.0)) * ss / denom)
}

/// `Σ (t³ − t)` over tie groups of a rank row.
fn tie_term(ranks: &[f64]) -> f64 {
    let mut counts: HashMap<u64, f64> = HashMap::new();
    for r in ranks {
        *counts.entry((r * 2.0).round() as u64).or_default() += 1.0;
    }
    counts.values().map(|t| t * t * t - t).sum()
}

/// Friedman rank test across the table's treatments (columns).
pub fn friedman_test(table: &BlockTable, method: PValueMethod) -> Result<FriedmanResult, StatsError> {
    table.check()?;
    let k = table.n_treatments();
    let n = table.n_blocks();
    let ranks: Vec<Vec<f64>> = table.values.iter().map(|row| average_ranks(row)).collect();
    let Some(stat) = statistic(&ranks, k) else {
        return Ok(FriedmanResult {
            statistic: 0.0,
            p_value: 1.0,
            n_blocks: n,
            n_treatments: k,
            method: if method == PValueMethod::Exact { PValueMethod::Exact } else { PValueMethod::ChiSquare },
        });
    };
    let chi = || FriedmanResult {
        statistic: stat,
        p_value: chi_square_sf(stat, (k - 1) as f64),
        n_blocks: n,
        n_treatments: k,
        method: PValueMethod::ChiSquare,
    };
    match method {
        PValueMethod::ChiSquare => Ok(chi()),
        PValueMethod::Exact | PValueMethod::Auto => match exact_p_value(&ranks, k) {
            Some(p) => Ok(FriedmanResult {
                statistic: stat,
                p_value: p,
                n_blocks: n,
                n_treatments: k,
                method: PValueMethod::Exact,
            }),
            None if method == PValueMethod::Auto => Ok(chi()),
            None => Err(StatsError::ExactTooLarge { blocks: n, treatments: k }),
        },
    }
}

/// Distinct orderings of a row's ranks (as doubled integers).
fn distinct_permutations(row: &[u32]) -> Vec<Vec<u32>> {
    let mut sorted = row.to_vec();
    sorted.sort_unstable();
    let mut out = vec![sorted.clone()];
    // next lexicographic permutation over a multiset
    loop {
        let Some(i) = (0..sorted.len().saturating_sub(1)).rev().find(|&i| sorted[i] < sorted[i + 1]) else {
            break;
        };
        let j = (i + 1..sorted.len()).rev().find(|&j| sorted[j] > sorted[i]).expect("successor exists");
        sorted.swap(i, j);
        sorted[i + 1..].reverse();
        out.push(sorted.clone());
    }
    out
}

/// Exact `P(T ≥ T_obs)` under independent uniform permutation of each
/// block's ranks, or `None` if enumeration exceeds the work budget.
///
/// The tie structure of each block is fixed under permutation, so `T` is an
/// increasing function of the sum of squared column rank sums; the
/// distribution of column rank-sum vectors is built block by block.
fn exact_p_value(ranks: &[Vec<f64>], k: usize) -> Option<f64> {
    let doubled: Vec<Vec<u32>> = ranks
        .iter()
        .map(|row| row.iter().map(|r| (r * 2.0).round() as u32).collect())
        .collect();
    let observed: u64 = {
        let mut col = vec![0u64; k];
        for row in &doubled {
            for (c, &r) in col.iter_mut().zip(row) {
                *c += r as u64;
            }
        }
        col.iter().map(|c| c * c).sum()
    };
    let mut states: HashMap<Vec<u32>, f64> = HashMap::from([(vec![0; k], 1.0)]);
    for row in &doubled {
        let perms = distinct_permutations(row);
        if states.len().saturating_mul(perms.len()) > EXACT_BUDGET {
            return None;
        }
        let w = 1.0 / perms.len() as f64;
        let mut next: HashMap<Vec<u32>, f64> = HashMap::with_capacity(states.len() * perms.len());
        for (sums, p) in &states {
            for perm in &perms {
                let key: Vec<u32> = sums.iter().zip(perm).map(|(a, b)| a + b).collect();
                *next.entry(key).or_default() += p * w;
            }
        }
        states = next;
    }
    let p: f64 = states
        .iter()
        .filter(|(sums, _)| sums.iter().map(|&c| (c as u64) * (c as u64)).sum::<u64>() >= observed)
        .map(|(_, p)| p)
        .sum();
    Some(p.clamp(0.0, 1.0))
}
