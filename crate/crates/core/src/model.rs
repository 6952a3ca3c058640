//! Domain types shared by the pipeline and evaluation stages.
//!
//! All types are immutable value objects after construction and safe to share
//! across threads. Cluster types carry index-based references back into the
//! proposition list so that duplicate texts from different comments count
//! separately toward prevalence.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// A single user comment inside a thread.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub comment_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
    pub text: String,
}

/// A discussion topic plus its ordered comments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thread {
    pub thread_id: String,
    pub topic: String,
    pub comments: Vec<Comment>,
}

/// One extracted claim with its reasons, linked to the source comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposition {
    pub prop_id: usize,
    pub source_comment_id: String,
    pub claim: String,
    pub reasons: Vec<String>,
}

/// Reference to one reason instance: (proposition, index into its reason list).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ReasonRef {
    pub prop_id: usize,
    pub reason_index: usize,
}

/// A group of mutually supportive claims.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimCluster {
    pub cluster_id: usize,
    /// Sorted ascending, non-empty.
    pub member_prop_ids: Vec<usize>,
}

/// A group of equivalent reasons inside one claim cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasonCluster {
    pub cluster_id: usize,
    pub parent_claim_cluster_id: usize,
    /// Sorted ascending, non-empty.
    pub members: Vec<ReasonRef>,
}

/// One summarized reason with its prevalence (member count of its cluster).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryReason {
    pub reason_cluster_id: usize,
    pub reason_text: String,
    pub prevalence: usize,
}

/// One summarized claim with its summarized reasons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub claim_cluster_id: usize,
    pub claim_text: String,
    pub reasons: Vec<SummaryReason>,
}

/// The final claim-reason structured summary, ordered by claim cluster id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredSummary {
    pub entries: Vec<SummaryEntry>,
}

/// Raw thread record as read from an input file, before validation.
#[derive(Debug, Clone, Deserialize)]
pub struct RawThread {
    #[serde(default)]
    pub thread_id: Option<String>,
    pub topic: String,
    pub comments: Vec<RawComment>,
}

/// Raw comment record before validation. `comment_id` may be absent.
#[derive(Debug, Clone, Deserialize)]
pub struct RawComment {
    #[serde(default)]
    pub comment_id: Option<String>,
    #[serde(default)]
    pub author: Option<String>,
    pub text: String,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("empty comment list in thread '{thread_id}'")]
    EmptyCommentList { thread_id: String },
    #[error("duplicate comment_id '{comment_id}' in thread '{thread_id}'")]
    DuplicateCommentId { thread_id: String, comment_id: String },
    #[error("empty text in comment '{comment_id}' of thread '{thread_id}'")]
    EmptyCommentText { thread_id: String, comment_id: String },
    #[error("claim cluster members do not partition the proposition set: {detail}")]
    BrokenPartition { detail: String },
    #[error("prevalence mismatch for reason cluster {cluster_id}: entry says {entry}, cluster has {actual} members")]
    PrevalenceMismatch { cluster_id: usize, entry: usize, actual: usize },
    #[error("summary references unknown cluster_id {cluster_id}")]
    UnknownClusterId { cluster_id: usize },
    #[error("claim cluster {cluster_id} appears more than once in the summary")]
    DuplicateSummaryEntry { cluster_id: usize },
}

/// Validates a raw record into a [`Thread`].
///
/// Comments missing an id are assigned their sequential position (as a
/// string). Order is preserved from the source.
pub fn validate_thread(raw: RawThread) -> Result<Thread, ModelError> {
    let thread_id = raw.thread_id.unwrap_or_default();
    if raw.comments.is_empty() {
        return Err(ModelError::EmptyCommentList { thread_id });
    }
    let mut seen = BTreeSet::new();
    let mut comments = Vec::with_capacity(raw.comments.len());
    for (idx, rc) in raw.comments.into_iter().enumerate() {
        let comment_id = rc
            .comment_id
            .filter(|id| !id.trim().is_empty())
            .unwrap_or_else(|| idx.to_string());
        if !seen.insert(comment_id.clone()) {
            return Err(ModelError::DuplicateCommentId { thread_id, comment_id });
        }
        if rc.text.trim().is_empty() {
            return Err(ModelError::EmptyCommentText { thread_id, comment_id });
        }
        comments.push(Comment {
            comment_id,
            author: rc.author,
            text: rc.text,
        });
    }
    Ok(Thread {
        thread_id,
        topic: raw.topic,
        comments,
    })
}

/// Draft of a proposition before ids are assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropositionDraft {
    pub source_comment_id: String,
    pub claim: String,
    pub reasons: Vec<String>,
}

/// Assigns sequential prop ids `0..n-1` in input order.
pub fn assign_prop_ids(drafts: Vec<PropositionDraft>) -> Vec<Proposition> {
    drafts
        .into_iter()
        .enumerate()
        .map(|(prop_id, d)| Proposition {
            prop_id,
            source_comment_id: d.source_comment_id,
            claim: d.claim,
            reasons: d.reasons,
        })
        .collect()
}

/// Checks that claim clusters partition `0..prop_count` and that reason
/// clusters partition the aggregated reason set of their parent claim
/// cluster.
pub fn check_partition(
    claim_clusters: &[ClaimCluster],
    reason_clusters: &[ReasonCluster],
    props: &[Proposition],
) -> Result<(), ModelError> {
    let mut covered = BTreeSet::new();
    for cluster in claim_clusters {
        for &pid in &cluster.member_prop_ids {
            if pid >= props.len() {
                return Err(ModelError::BrokenPartition {
                    detail: format!("prop_id {pid} out of range"),
                });
            }
            if !covered.insert(pid) {
                return Err(ModelError::BrokenPartition {
                    detail: format!("prop_id {pid} in more than one claim cluster"),
                });
            }
        }
    }
    if covered.len() != props.len() {
        return Err(ModelError::BrokenPartition {
            detail: format!("{} of {} prop_ids covered", covered.len(), props.len()),
        });
    }

    for cluster in claim_clusters {
        let expected: BTreeSet<ReasonRef> = cluster
            .member_prop_ids
            .iter()
            .flat_map(|&pid| {
                (0..props[pid].reasons.len()).map(move |reason_index| ReasonRef {
                    prop_id: pid,
                    reason_index,
                })
            })
            .collect();
        let mut got = BTreeSet::new();
        for rc in reason_clusters
            .iter()
            .filter(|rc| rc.parent_claim_cluster_id == cluster.cluster_id)
        {
            for &r in &rc.members {
                if !expected.contains(&r) {
                    return Err(ModelError::BrokenPartition {
                        detail: format!(
                            "reason ref {r:?} not in aggregated set of claim cluster {}",
                            cluster.cluster_id
                        ),
                    });
                }
                if !got.insert(r) {
                    return Err(ModelError::BrokenPartition {
                        detail: format!("reason ref {r:?} in more than one reason cluster"),
                    });
                }
            }
        }
        if got != expected {
            return Err(ModelError::BrokenPartition {
                detail: format!(
                    "claim cluster {}: {} of {} reason refs covered",
                    cluster.cluster_id,
                    got.len(),
                    expected.len()
                ),
            });
        }
    }
    Ok(())
}

/// Checks the conservation invariants of a finished summary: every referenced
/// cluster exists, prevalence equals member count, and no claim cluster
/// yields more than one entry.
pub fn check_summary(
    summary: &StructuredSummary,
    claim_clusters: &[ClaimCluster],
    reason_clusters: &[ReasonCluster],
) -> Result<(), ModelError> {
    let mut seen_claims = BTreeSet::new();
    for entry in &summary.entries {
        if !seen_claims.insert(entry.claim_cluster_id) {
            return Err(ModelError::DuplicateSummaryEntry {
                cluster_id: entry.claim_cluster_id,
            });
        }
        if !claim_clusters
            .iter()
            .any(|c| c.cluster_id == entry.claim_cluster_id)
        {
            return Err(ModelError::UnknownClusterId {
                cluster_id: entry.claim_cluster_id,
            });
        }
        for reason in &entry.reasons {
            let cluster = reason_clusters
                .iter()
                .find(|rc| rc.cluster_id == reason.reason_cluster_id)
                .ok_or(ModelError::UnknownClusterId {
                    cluster_id: reason.reason_cluster_id,
                })?;
            if cluster.members.len() != reason.prevalence {
                return Err(ModelError::PrevalenceMismatch {
                    cluster_id: reason.reason_cluster_id,
                    entry: reason.prevalence,
                    actual: cluster.members.len(),
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(topic: &str, comments: Vec<(&str, &str)>) -> RawThread {
        RawThread {
            thread_id: Some("t0".into()),
            topic: topic.into(),
            comments: comments
                .into_iter()
                .map(|(id, text)| RawComment {
                    comment_id: Some(id.into()),
                    author: None,
                    text: text.into(),
                })
                .collect(),
        }
    }

    #[test]
    fn validate_minimal_thread() {
        let t = validate_thread(raw("t", vec![("a", "x")])).unwrap();
        assert_eq!(t.comments.len(), 1);
        assert_eq!(t.comments[0].comment_id, "a");
    }

    #[test]
    fn validate_rejects_empty_comment_list() {
        let err = validate_thread(raw("t", vec![])).unwrap_err();
        assert!(matches!(err, ModelError::EmptyCommentList { .. }));
        assert!(err.to_string().contains("empty comment list"));
    }

    #[test]
    fn validate_rejects_duplicate_ids() {
        let err = validate_thread(raw("t", vec![("a", "x"), ("a", "y")])).unwrap_err();
        assert!(matches!(err, ModelError::DuplicateCommentId { .. }));
        assert!(err.to_string().contains("duplicate comment_id"));
    }

    #[test]
    fn validate_rejects_whitespace_text() {
        let err = validate_thread(raw("t", vec![("a", "  \n ")])).unwrap_err();
        assert!(matches!(err, ModelError::EmptyCommentText { .. }));
    }

    #[test]
    fn validate_assigns_sequential_ids_when_missing() {
        let t = validate_thread(RawThread {
            thread_id: None,
            topic: "t".into(),
            comments: vec![
                RawComment { comment_id: None, author: None, text: "x".into() },
                RawComment { comment_id: None, author: None, text: "y".into() },
            ],
        })
        .unwrap();
        assert_eq!(t.comments[0].comment_id, "0");
        assert_eq!(t.comments[1].comment_id, "1");
    }

    fn draft(comment: &str, claim: &str) -> PropositionDraft {
        PropositionDraft {
            source_comment_id: comment.into(),
            claim: claim.into(),
            reasons: vec![],
        }
    }

    #[test]
    fn prop_ids_are_sequential_and_deterministic() {
        let drafts = vec![draft("a", "c0"), draft("a", "c1"), draft("b", "c2")];
        let props = assign_prop_ids(drafts.clone());
        assert_eq!(
            props.iter().map(|p| p.prop_id).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
        assert_eq!(props, assign_prop_ids(drafts));
        assert!(assign_prop_ids(vec![]).is_empty());
    }

    #[test]
    fn thread_round_trips_through_json() {
        let t = validate_thread(raw("topic", vec![("a", "x"), ("b", "y")])).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        let back: Thread = serde_json::from_str(&json).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn summary_round_trips_through_json() {
        let s = StructuredSummary {
            entries: vec![SummaryEntry {
                claim_cluster_id: 0,
                claim_text: "c".into(),
                reasons: vec![SummaryReason {
                    reason_cluster_id: 0,
                    reason_text: "r".into(),
                    prevalence: 2,
                }],
            }],
        };
        let json = serde_json::to_string(&s).unwrap();
        let back: StructuredSummary = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn partition_check_catches_overlap_and_gaps() {
        let props = assign_prop_ids(vec![draft("a", "c0"), draft("a", "c1")]);
        let ok = vec![
            ClaimCluster { cluster_id: 0, member_prop_ids: vec![0] },
            ClaimCluster { cluster_id: 1, member_prop_ids: vec![1] },
        ];
        assert!(check_partition(&ok, &[], &props).is_ok());

        let overlap = vec![
            ClaimCluster { cluster_id: 0, member_prop_ids: vec![0, 1] },
            ClaimCluster { cluster_id: 1, member_prop_ids: vec![1] },
        ];
        assert!(check_partition(&overlap, &[], &props).is_err());

        let gap = vec![ClaimCluster { cluster_id: 0, member_prop_ids: vec![0] }];
        assert!(check_partition(&gap, &[], &props).is_err());
    }

    #[test]
    fn summary_check_catches_prevalence_mismatch() {
        let claim_clusters = vec![ClaimCluster { cluster_id: 0, member_prop_ids: vec![0] }];
        let reason_clusters = vec![ReasonCluster {
            cluster_id: 0,
            parent_claim_cluster_id: 0,
            members: vec![ReasonRef { prop_id: 0, reason_index: 0 }],
        }];
        let summary = StructuredSummary {
            entries: vec![SummaryEntry {
                claim_cluster_id: 0,
                claim_text: "c".into(),
                reasons: vec![SummaryReason {
                    reason_cluster_id: 0,
                    reason_text: "r".into(),
                    prevalence: 3,
                }],
            }],
        };
        let err = check_summary(&summary, &claim_clusters, &reason_clusters).unwrap_err();
        assert!(matches!(err, ModelError::PrevalenceMismatch { .. }));
    }
}
