//! Soft precision/recall/F1 over argument sets: per-item maxima of a
//! pluggable pairwise similarity function.

use super::EvalError;
use serde::{Deserialize, Serialize};

/// Flattened claims and reasons of one summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentSet {
    pub items: Vec<String>,
}

impl ArgumentSet {
    pub fn new(items: Vec<String>) -> Self {
        Self { items }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftScores {
    pub s_precision: f64,
    pub s_recall: f64,
    pub s_f1: f64,
}

/// Soft-P is the mean over distinct generated items of the best similarity
/// against the reference set; soft-R swaps the roles; soft-F1 is their
/// harmonic mean (0 when both are 0). Both sides are treated as sets, so
/// exact duplicates contribute once.
pub fn soft_prf<F>(
    generated: &ArgumentSet,
    reference: &ArgumentSet,
    similarity: F,
) -> Result<SoftScores, EvalError>
where
    F: Fn(&str, &str) -> f64,
{
    if generated.items.is_empty() || reference.items.is_empty() {
        return Err(EvalError::EmptyArgumentSet);
    }
    let distinct = |items: &[String]| -> Vec<String> {
        let mut seen = Vec::new();
        for item in items {
            if !seen.contains(item) {
                seen.push(item.clone());
            }
        }
        seen
    };
    let gen_items = distinct(&generated.items);
    let ref_items = distinct(&reference.items);

    let best = |from: &[String], against: &[String], flip: bool| -> f64 {
        let total: f64 = from
            .iter()
            .map(|a| {
                against
                    .iter()
                    .map(|b| if flip { similarity(b, a) } else { similarity(a, b) })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .sum();
        total / from.len() as f64
    };
    let s_precision = best(&gen_items, &ref_items, false);
    let s_recall = best(&ref_items, &gen_items, true);
    let s_f1 = if s_precision + s_recall > 0.0 {
        2.0 * s_precision * s_recall / (s_precision + s_recall)
    } else {
        0.0
    };
    Ok(SoftScores {
        s_precision,
        s_recall,
        s_f1,
    })
}
