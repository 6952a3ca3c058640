//! Native ROUGE-N and ROUGE-L.
//!
//! Tokenization: lowercase, split on runs of non-alphanumeric characters,
//! no stemming, no stopword removal. Scores are 0 when either side has no
//! n-grams.

use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RougeScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for window in tokens.windows(n) {
        *counts.entry(window).or_insert(0) += 1;
    }
    counts
}

fn prf(overlap: usize, cand_total: usize, ref_total: usize) -> RougeScores {
    if cand_total == 0 || ref_total == 0 {
        return RougeScores::default();
    }
    let precision = overlap as f64 / cand_total as f64;
    let recall = overlap as f64 / ref_total as f64;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    RougeScores { precision, recall, f1 }
}

/// N-gram overlap P/R/F1 of `candidate` against `reference`.
pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> RougeScores {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    let cand_counts = ngram_counts(&cand, n);
    let ref_counts = ngram_counts(&refr, n);

    let overlap: usize = cand_counts
        .iter()
        .map(|(gram, &c)| c.min(*ref_counts.get(gram).unwrap_or(&0)))
        .sum();
    let cand_total: usize = cand_counts.values().sum();
    let ref_total: usize = ref_counts.values().sum();
    prf(overlap, cand_total, ref_total)
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Longest-common-subsequence P/R/F1 of `candidate` against `reference`.
pub fn rouge_l(candidate: &str, reference: &str) -> RougeScores {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() || refr.is_empty() {
        return RougeScores::default();
    }
    let lcs = lcs_len(&cand, &refr);
    prf(lcs, cand.len(), refr.len())
}
