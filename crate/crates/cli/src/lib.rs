//! Orchestration layer for the summarization pipeline: configuration,
//! resumable stage artifacts, the end-to-end runner, dataset ingestion, and
//! the metric report.

pub mod artifacts;
pub mod config;
pub mod evalrun;
pub mod ingest;
pub mod pipeline;

use argquant::extraction::ExtractError;
use argquant::gateway::GatewayError;
use argquant::scoring::ScoreError;
use argquant::summary::SummaryError;

/// Process exit codes: 0 success, 1 validation, 2 backend, 3 parse or
/// repair exhaustion.
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<GatewayError>() {
            return match e {
                GatewayError::EmptyPrompt => 1,
                _ => 2,
            };
        }
        if let Some(e) = cause.downcast_ref::<ExtractError>() {
            return match e {
                ExtractError::Gateway { .. } => 2,
                ExtractError::Unparseable { .. } => 3,
                ExtractError::Prompt(_) => 1,
            };
        }
        if let Some(e) = cause.downcast_ref::<ScoreError>() {
            return match e {
                ScoreError::Gateway(_) => 2,
                ScoreError::Prompt(_) => 1,
                _ => 3,
            };
        }
        if let Some(e) = cause.downcast_ref::<SummaryError>() {
            return match e {
                SummaryError::InvalidOutput { .. } | SummaryError::AllClustersFailed { .. } => 3,
                SummaryError::BadMachineFormat(_) => 1,
            };
        }
        if cause.downcast_ref::<argquant::eval::EvalError>().is_some() {
            return match cause.downcast_ref::<argquant::eval::EvalError>().unwrap() {
                argquant::eval::EvalError::Gateway(_) => 2,
                argquant::eval::EvalError::NoLabel { .. } => 3,
                _ => 1,
            };
        }
    }
    1
}
