//! Golden fixture for the end-to-end pipeline tests: a three-comment
//! thread, the scripted-backend transcript that drives every stage, and the
//! expected summary artifact. Everything derives from the tables below, and
//! the committed fixture files are checked against this generator so they
//! cannot drift from the prompt templates.

// Each integration test target compiles this module separately and uses a
// different subset of it.
#![allow(dead_code)]

use argquant::gateway::{ScriptedBackend, TranscriptEntry};
use argquant::model::{
    ClaimCluster, Comment, Proposition, ReasonCluster, ReasonRef, StructuredSummary,
    SummaryEntry, SummaryReason, Thread,
};
use argquant::prompts::PromptCatalog;
use argquant::scoring::pairwise_prompt;
use argquant::summary::{build_bundle, build_summary_prompt};
use argquant_cli::artifacts::{Provenance, SummaryArtifact, ThreadSummary};
use std::path::PathBuf;

pub const THREAD_ID: &str = "bike-lanes";
pub const TOPIC: &str = "Should our city build more bike lanes?";

const COMMENTS: &[(&str, Option<&str>, &str)] = &[
    (
        "c1",
        Some("ada"),
        "Bike lanes make our streets safer. Drivers give cyclists far more room where the \
         lanes are clearly marked.",
    ),
    (
        "c2",
        Some("bo"),
        "The city should build more bike lanes, because protected lanes lower crash rates. \
         And bike lanes ease downtown congestion, since people drive less when cycling is \
         practical.",
    ),
    (
        "c3",
        None,
        "Honestly, new lanes would waste city money. Hardly anyone cycles here during winter.",
    ),
];

pub const CLAIMS: &[&str] = &[
    "Bike lanes make streets safer",
    "The city should build more bike lanes",
    "Bike lanes ease downtown congestion",
    "New bike lanes waste city money",
];

pub const REASONS: &[&str] = &[
    "Drivers give cyclists more room where lanes are marked",
    "Protected lanes lower crash rates",
    "People drive less when cycling is practical",
    "Few people cycle during winter",
];

/// Which comment each proposition comes from.
const PROP_SOURCES: &[&str] = &["c1", "c2", "c2", "c3"];

const EXTRACTION_RESPONSES: &[&str] = &[
    r#"{"arguments": [{"claim": "Bike lanes make streets safer", "reasons": ["Drivers give cyclists more room where lanes are marked"]}]}"#,
    r#"{"arguments": [{"claim": "The city should build more bike lanes", "reasons": ["Protected lanes lower crash rates"]}, {"claim": "Bike lanes ease downtown congestion", "reasons": ["People drive less when cycling is practical"]}]}"#,
    r#"{"arguments": [{"claim": "New bike lanes waste city money", "reasons": ["Few people cycle during winter"]}]}"#,
];

/// Sampled scores for "claim m supports claim n".
const CLAIM_SAMPLES: &[(usize, usize, [i32; 5])] = &[
    (0, 1, [5, 5, 4, 5, 4]),
    (1, 0, [4, 4, 4, 5, 4]),
    (1, 2, [4, 4, 4, 3, 4]),
    (2, 1, [4, 3, 4, 3, 4]),
    (0, 2, [3, 3, 3, 3, 3]),
    (2, 0, [3, 3, 3, 3, 3]),
    (0, 3, [1, 2, 1, 1, 2]),
    (3, 0, [2, 2, 2, 1, 2]),
    (1, 3, [1, 1, 1, 2, 1]),
    (3, 1, [1, 2, 1, 2, 1]),
    (2, 3, [2, 2, 2, 3, 2]),
    (3, 2, [2, 2, 2, 2, 2]),
];

/// Sampled scores for "reason of claim m supports claim n".
const REASON_SUPPORT_SAMPLES: &[(usize, usize, [i32; 5])] = &[
    (0, 1, [4, 4, 4, 4, 4]),
    (0, 2, [3, 2, 3, 2, 3]),
    (0, 3, [1, 1, 2, 1, 1]),
    (1, 0, [4, 5, 4, 4, 5]),
    (1, 2, [3, 4, 3, 4, 3]),
    (1, 3, [1, 1, 1, 1, 1]),
    (2, 0, [3, 3, 3, 2, 3]),
    (2, 1, [3, 3, 3, 3, 3]),
    (2, 3, [2, 3, 2, 3, 2]),
    (3, 0, [2, 1, 2, 1, 2]),
    (3, 1, [2, 2, 1, 2, 2]),
    (3, 2, [2, 2, 2, 3, 2]),
];

/// Sampled scores for "reason u supports reason v" inside claim cluster 0.
const REASON_PAIR_SAMPLES: &[(usize, usize, [i32; 5])] = &[
    (0, 1, [4, 4, 5, 4, 4]),
    (1, 0, [5, 4, 5, 4, 5]),
    (0, 2, [2, 3, 2, 3, 2]),
    (2, 0, [3, 2, 3, 2, 3]),
    (1, 2, [3, 3, 3, 3, 3]),
    (2, 1, [3, 3, 3, 3, 3]),
];

const SUMMARY_RESPONSES: &[&str] = &[
    r#"{"claim": "Build more bike lanes", "reasons": [{"reason_cluster_id": 0, "reason_text": "Lanes make cycling safer"}, {"reason_cluster_id": 1, "reason_text": "Cycling eases downtown congestion"}]}"#,
    r#"{"claim": "New bike lanes waste money", "reasons": [{"reason_cluster_id": 2, "reason_text": "Few people cycle in winter"}]}"#,
];

pub fn prompts_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../prompts")
}

pub fn catalog() -> PromptCatalog {
    PromptCatalog::load(&prompts_dir()).expect("workspace prompt assets load")
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden")
}

pub fn thread() -> Thread {
    Thread {
        thread_id: THREAD_ID.into(),
        topic: TOPIC.into(),
        comments: COMMENTS
            .iter()
            .map(|&(id, author, text)| Comment {
                comment_id: id.into(),
                author: author.map(str::to_string),
                text: text.into(),
            })
            .collect(),
    }
}

pub fn thread_jsonl() -> String {
    let mut line = serde_json::to_string(&thread()).expect("thread serializes");
    line.push('\n');
    line
}

pub fn propositions() -> Vec<Proposition> {
    (0..4)
        .map(|i| Proposition {
            prop_id: i,
            source_comment_id: PROP_SOURCES[i].into(),
            claim: CLAIMS[i].into(),
            reasons: vec![REASONS[i].into()],
        })
        .collect()
}

pub fn claim_clusters() -> Vec<ClaimCluster> {
    vec![
        ClaimCluster { cluster_id: 0, member_prop_ids: vec![0, 1, 2] },
        ClaimCluster { cluster_id: 1, member_prop_ids: vec![3] },
    ]
}

pub fn reason_clusters() -> Vec<ReasonCluster> {
    vec![
        ReasonCluster {
            cluster_id: 0,
            parent_claim_cluster_id: 0,
            members: vec![
                ReasonRef { prop_id: 0, reason_index: 0 },
                ReasonRef { prop_id: 1, reason_index: 0 },
            ],
        },
        ReasonCluster {
            cluster_id: 1,
            parent_claim_cluster_id: 0,
            members: vec![ReasonRef { prop_id: 2, reason_index: 0 }],
        },
        ReasonCluster {
            cluster_id: 2,
            parent_claim_cluster_id: 1,
            members: vec![ReasonRef { prop_id: 3, reason_index: 0 }],
        },
    ]
}

pub fn expected_summary() -> StructuredSummary {
    StructuredSummary {
        entries: vec![
            SummaryEntry {
                claim_cluster_id: 0,
                claim_text: "Build more bike lanes".into(),
                reasons: vec![
                    SummaryReason {
                        reason_cluster_id: 0,
                        reason_text: "Lanes make cycling safer".into(),
                        prevalence: 2,
                    },
                    SummaryReason {
                        reason_cluster_id: 1,
                        reason_text: "Cycling eases downtown congestion".into(),
                        prevalence: 1,
                    },
                ],
            },
            SummaryEntry {
                claim_cluster_id: 1,
                claim_text: "New bike lanes waste money".into(),
                reasons: vec![SummaryReason {
                    reason_cluster_id: 2,
                    reason_text: "Few people cycle in winter".into(),
                    prevalence: 1,
                }],
            },
        ],
    }
}

/// The expected final artifact, sans config hash (irrelevant to output
/// rendering).
pub fn expected_artifact() -> SummaryArtifact {
    SummaryArtifact {
        config_hash: String::new(),
        threads: vec![ThreadSummary {
            thread_id: THREAD_ID.into(),
            topic: TOPIC.into(),
            summary: expected_summary(),
            provenance: Provenance {
                claim_clusters: claim_clusters(),
                reason_clusters: reason_clusters(),
            },
            failures: vec![],
        }],
    }
}

pub fn expected_output() -> String {
    argquant_cli::pipeline::render_output(
        &expected_artifact(),
        argquant::summary::SummaryFormat::Machine,
    )
}

fn score_responses(samples: &[i32; 5]) -> Vec<String> {
    samples.iter().map(|s| format!("Score: {s}")).collect()
}

/// Builds the full scripted transcript for the golden thread.
pub fn transcript_entries() -> Vec<TranscriptEntry> {
    let catalog = catalog();
    let thread = thread();
    let props = propositions();
    let mut entries = Vec::new();

    for (comment, response) in thread.comments.iter().zip(EXTRACTION_RESPONSES) {
        entries.push(TranscriptEntry {
            prompt: argquant::extraction::build_extraction_prompt(&catalog, comment, TOPIC),
            responses: vec![response.to_string()],
        });
    }
    for &(m, n, samples) in CLAIM_SAMPLES {
        entries.push(TranscriptEntry {
            prompt: pairwise_prompt(&catalog, CLAIMS[m], CLAIMS[n]),
            responses: score_responses(&samples),
        });
    }
    for &(m, n, samples) in REASON_SUPPORT_SAMPLES {
        entries.push(TranscriptEntry {
            prompt: pairwise_prompt(&catalog, REASONS[m], CLAIMS[n]),
            responses: score_responses(&samples),
        });
    }
    for &(u, v, samples) in REASON_PAIR_SAMPLES {
        entries.push(TranscriptEntry {
            prompt: pairwise_prompt(&catalog, REASONS[u], REASONS[v]),
            responses: score_responses(&samples),
        });
    }
    let clusters = claim_clusters();
    let reason_clusters = reason_clusters();
    for (cluster, response) in clusters.iter().zip(SUMMARY_RESPONSES) {
        let bundle = build_bundle(cluster, &reason_clusters, &props);
        entries.push(TranscriptEntry {
            prompt: build_summary_prompt(&catalog, &bundle),
            responses: vec![response.to_string()],
        });
    }
    entries
}

pub fn transcript_json() -> String {
    ScriptedBackend::transcript_json(&transcript_entries())
}
