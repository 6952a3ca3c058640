//! Claim-reason structured, quantified summarization of online discussion
//! threads, plus the metric suite used to evaluate such summaries.
//!
//! The pipeline has three stages: argument proposition extraction (one LLM
//! call per comment, grounded in the Toulmin claim/reason decomposition),
//! entailment-based clustering of claims and of their aggregated reasons,
//! and per-cluster structured summary generation with cluster-ID
//! verification. Backends sit behind [`gateway::Gateway`], which caches
//! responses content-addressed so warm runs replay byte-identically without
//! network access.

pub mod clustering;
pub mod eval;
pub mod extraction;
pub mod gateway;
pub mod model;
pub mod prompts;
pub mod scoring;
pub mod summary;

pub use model::{
    ClaimCluster, Comment, Proposition, ReasonCluster, ReasonRef, StructuredSummary,
    SummaryEntry, SummaryReason, Thread,
};
