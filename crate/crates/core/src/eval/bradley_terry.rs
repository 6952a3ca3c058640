//! Bradley-Terry strengths from pairwise comparison records, fitted by
//! minorization-maximization.
//!
//! The MM update never decreases the log-likelihood, so the recorded
//! trace is monotone. Smoothing (0.5 pseudo-wins each way on every observed
//! pair) is applied only when the unsmoothed MLE would diverge, i.e. when
//! some participant has zero wins or zero losses; otherwise the raw counts
//! are fitted so small closed-form cases come out exact.

// The win-matrix math reads clearest with index loops.
#![allow(clippy::needless_range_loop)]

use super::EvalError;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Aggregated outcome of paired comparisons: `winner` beat `loser` `count`
/// times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub winner: String,
    pub loser: String,
    pub count: u32,
}

/// Fit result: strengths normalized to sum 1, plus the likelihood trace.
#[derive(Debug, Clone)]
pub struct BradleyTerryFit {
    pub strengths: BTreeMap<String, f64>,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood_trace: Vec<f64>,
    pub smoothed: bool,
}

impl BradleyTerryFit {
    /// Predicted probability that `a` beats `b`.
    pub fn win_probability(&self, a: &str, b: &str) -> Option<f64> {
        let pa = self.strengths.get(a)?;
        let pb = self.strengths.get(b)?;
        Some(pa / (pa + pb))
    }
}

const SMOOTHING_EPSILON: f64 = 0.5;

/// Fits strengths by MM iteration with uniform initial strengths.
pub fn bradley_terry_fit(
    records: &[ComparisonRecord],
    tol: f64,
    max_iter: usize,
) -> Result<BradleyTerryFit, EvalError> {
    fit_with_init(records, tol, max_iter, 1.0)
}

/// Fit with all initial strengths set to `init`; the result is invariant to
/// this uniform scale.
pub fn fit_with_init(
    records: &[ComparisonRecord],
    tol: f64,
    max_iter: usize,
    init: f64,
) -> Result<BradleyTerryFit, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyJudgments);
    }
    for r in records {
        if r.winner == r.loser {
            return Err(EvalError::InvalidComparison(format!(
                "participant '{}' compared against itself",
                r.winner
            )));
        }
        if r.count == 0 {
            return Err(EvalError::InvalidComparison(format!(
                "zero-count record for '{}' vs '{}'",
                r.winner, r.loser
            )));
        }
    }

    let mut names = BTreeSet::new();
    for r in records {
        names.insert(r.winner.clone());
        names.insert(r.loser.clone());
    }
    let names: Vec<String> = names.into_iter().collect();
    let index: BTreeMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let n = names.len();

    // wins[i][j]: times i beat j.
    let mut wins = vec![vec![0.0f64; n]; n];
    for r in records {
        wins[index[r.winner.as_str()]][index[r.loser.as_str()]] += r.count as f64;
    }

    let components = connected_components(&names, &wins);
    if components.len() > 1 {
        return Err(EvalError::DisconnectedComparisons { components });
    }

    let total_wins = |w: &Vec<Vec<f64>>, i: usize| -> f64 { w[i].iter().sum() };
    let total_losses =
        |w: &Vec<Vec<f64>>, i: usize| -> f64 { (0..n).map(|j| w[j][i]).sum() };
    let needs_smoothing = (0..n)
        .any(|i| total_wins(&wins, i) == 0.0 || total_losses(&wins, i) == 0.0);
    if needs_smoothing {
        for i in 0..n {
            for j in i + 1..n {
                if wins[i][j] + wins[j][i] > 0.0 {
                    wins[i][j] += SMOOTHING_EPSILON;
                    wins[j][i] += SMOOTHING_EPSILON;
                }
            }
        }
    }

    let pair_total: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| wins[i][j] + wins[j][i]).collect())
        .collect();

    // The likelihood is invariant to uniform scaling, so the iterate is
    // renormalized to sum 1 each round; convergence is then a statement
    // about the identifiable quantity.
    let normalize = |v: &mut Vec<f64>| {
        let sum: f64 = v.iter().sum();
        for x in v.iter_mut() {
            *x /= sum;
        }
    };
    let mut strengths = vec![init.max(f64::MIN_POSITIVE); n];
    normalize(&mut strengths);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..max_iter {
        iterations = iter + 1;
        let mut next = vec![0.0f64; n];
        for i in 0..n {
            let denom: f64 = (0..n)
                .filter(|&j| j != i && pair_total[i][j] > 0.0)
                .map(|j| pair_total[i][j] / (strengths[i] + strengths[j]))
                .sum();
            next[i] = if denom > 0.0 {
                total_wins(&wins, i) / denom
            } else {
                strengths[i]
            };
        }
        normalize(&mut next);
        let max_rel_change = strengths
            .iter()
            .zip(next.iter())
            .map(|(old, new)| (new - old).abs() / old.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        strengths = next;
        trace.push(log_likelihood(&wins, &strengths));
        if max_rel_change < tol {
            converged = true;
            break;
        }
    }

    let strengths = names.into_iter().zip(strengths).collect();
    Ok(BradleyTerryFit {
        strengths,
        iterations,
        converged,
        log_likelihood_trace: trace,
        smoothed: needs_smoothing,
    })
}

fn log_likelihood(wins: &[Vec<f64>], strengths: &[f64]) -> f64 {
    let n = strengths.len();
    let mut ll = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && wins[i][j] > 0.0 {
                ll += wins[i][j] * (strengths[i] / (strengths[i] + strengths[j])).ln();
            }
        }
    }
    ll
}

fn connected_components(names: &[String], wins: &[Vec<f64>]) -> Vec<Vec<String>> {
    let n = names.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for i in 0..n {
        for j in i + 1..n {
            if wins[i][j] + wins[j][i] > 0.0 {
                let ri = find(&mut parent, i);
                let rj = find(&mut parent, j);
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut by_root: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        by_root.entry(root).or_default().push(names[i].clone());
    }
    by_root.into_values().collect()
}
