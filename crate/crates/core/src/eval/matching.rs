//! Match-level precision/recall/F1 and support precision.

use super::EvalError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchLevel {
    Claim,
    Reason,
    ClaimReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchLabel {
    Match,
    NonMatch,
}

/// One pairwise judgment between a generated item and an original item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchJudgment {
    pub generated_id: String,
    pub original_id: String,
    pub level: MatchLevel,
    pub label: MatchLabel,
}

/// Precision/recall/F1 of predicted matches against ground truth. A metric
/// whose denominator is empty is reported as absent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchPrf {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

fn match_pairs(judgments: &[MatchJudgment], level: MatchLevel) -> BTreeSet<(String, String)> {
    judgments
        .iter()
        .filter(|j| j.level == level && j.label == MatchLabel::Match)
        .map(|j| (j.generated_id.clone(), j.original_id.clone()))
        .collect()
}

/// Set-level P/R/F1 at one level: precision over the predicted match set,
/// recall over the ground-truth match set.
pub fn match_prf(
    predicted: &[MatchJudgment],
    truth: &[MatchJudgment],
    level: MatchLevel,
) -> MatchPrf {
    let predicted = match_pairs(predicted, level);
    let truth = match_pairs(truth, level);
    let correct = predicted.intersection(&truth).count() as f64;

    let precision = (!predicted.is_empty()).then(|| correct / predicted.len() as f64);
    let recall = (!truth.is_empty()).then(|| correct / truth.len() as f64);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    MatchPrf { precision, recall, f1 }
}

/// Derives claim-reason level judgments from reason-level matches: a reason
/// pair counts as matched only when its parent claims are matched too.
/// `generated_parent` / `original_parent` map a reason id to its parent
/// claim id.
pub fn derive_claim_reason_judgments(
    reason_judgments: &[MatchJudgment],
    claim_judgments: &[MatchJudgment],
    generated_parent: impl Fn(&str) -> Option<String>,
    original_parent: impl Fn(&str) -> Option<String>,
) -> Vec<MatchJudgment> {
    let claim_matches = match_pairs(claim_judgments, MatchLevel::Claim);
    reason_judgments
        .iter()
        .filter(|j| j.level == MatchLevel::Reason)
        .map(|j| {
            let parents_match = match (
                generated_parent(&j.generated_id),
                original_parent(&j.original_id),
            ) {
                (Some(g), Some(o)) => claim_matches.contains(&(g, o)),
                _ => false,
            };
            MatchJudgment {
                generated_id: j.generated_id.clone(),
                original_id: j.original_id.clone(),
                level: MatchLevel::ClaimReason,
                label: if j.label == MatchLabel::Match && parents_match {
                    MatchLabel::Match
                } else {
                    MatchLabel::NonMatch
                },
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportLabel {
    Supports,
    Refutes,
}

/// One verification judgment of a (claim, reason) edge in the summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportJudgment {
    pub claim: String,
    pub reason: String,
    pub label: SupportLabel,
}

/// Fraction of judgments labeled `supports`.
pub fn support_precision(judgments: &[SupportJudgment]) -> Result<f64, EvalError> {
    if judgments.is_empty() {
        return Err(EvalError::EmptyJudgments);
    }
    let supports = judgments
        .iter()
        .filter(|j| j.label == SupportLabel::Supports)
        .count();
    Ok(supports as f64 / judgments.len() as f64)
}
