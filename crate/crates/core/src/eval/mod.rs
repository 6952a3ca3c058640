//! Metric suite: ROUGE, soft-P/R/F1 with pluggable similarity, match-level
//! P/R/F1, support precision, Bradley-Terry ranking, and the LLM judges
//! feeding the latter two.

pub mod bradley_terry;
pub mod judge;
pub mod matching;
pub mod rouge;
pub mod soft;

pub use bradley_terry::{bradley_terry_fit, BradleyTerryFit, ComparisonRecord};
pub use judge::{judge_match, judge_support};
pub use matching::{
    derive_claim_reason_judgments, match_prf, support_precision, MatchJudgment, MatchLabel,
    MatchLevel, MatchPrf, SupportJudgment, SupportLabel,
};
pub use rouge::{rouge_l, rouge_n, RougeScores};
pub use soft::{soft_prf, ArgumentSet, SoftScores};

use crate::gateway::GatewayError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("argument set is empty")]
    EmptyArgumentSet,
    #[error("no judgments given")]
    EmptyJudgments,
    #[error("invalid comparison record: {0}")]
    InvalidComparison(String),
    #[error("comparison graph is disconnected; components: {components:?}")]
    DisconnectedComparisons { components: Vec<Vec<String>> },
    #[error("no usable label in judge response: {raw:?}")]
    NoLabel { raw: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}
