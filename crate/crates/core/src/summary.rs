//! Structured summary generation: one prompt per claim cluster with
//! ID-tagged input, ID-verified parsing, and assembly into the final
//! claim-reason summary.

use crate::clustering::quantify;
use crate::gateway::{Gateway, GenerationRequest};
use crate::model::{
    ClaimCluster, Proposition, ReasonCluster, StructuredSummary, SummaryEntry, SummaryReason,
};
use crate::prompts::PromptCatalog;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const GENERATION_TEMPERATURE: f64 = 0.0;
const GENERATION_MAX_TOKENS: u32 = 512;

/// Length guidance: the prompt asks for at most 10 tokens; longer output is
/// warned about, and beyond the hard cap it counts as a violation.
pub const SOFT_TOKEN_LIMIT: usize = 10;
pub const HARD_TOKEN_LIMIT: usize = 25;

/// Serialized bundles larger than this drop duplicate member texts
/// (longest first) before prompting.
const BUNDLE_CHAR_BUDGET: usize = 24_000;

/// The ID-tagged input handed to the backend for one claim cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterBundle {
    pub claim_cluster_id: usize,
    pub claims: Vec<String>,
    pub reason_clusters: Vec<BundleReasonCluster>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleReasonCluster {
    pub reason_cluster_id: usize,
    pub reasons: Vec<String>,
    pub prevalence: usize,
}

/// Parsed and ID-verified response for one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSummary {
    pub claim_text: String,
    pub reasons: Vec<(usize, String)>,
}

/// Summary assembly result. Clusters that failed generation are reported
/// here instead of corrupting the summary.
#[derive(Debug, Clone)]
pub struct GeneratedSummary {
    pub summary: StructuredSummary,
    pub failures: Vec<ClusterFailure>,
}

#[derive(Debug, Clone)]
pub struct ClusterFailure {
    pub claim_cluster_id: usize,
    pub detail: String,
    pub repair_attempts: u32,
}

#[derive(Debug, Error)]
pub enum SummaryError {
    #[error("summary output for cluster {claim_cluster_id} invalid after repair: {violations:?}")]
    InvalidOutput {
        claim_cluster_id: usize,
        violations: Vec<String>,
    },
    #[error("summary generation failed for every claim cluster: {details:?}")]
    AllClustersFailed { details: Vec<String> },
    #[error("machine summary did not parse: {0}")]
    BadMachineFormat(String),
}

#[derive(Deserialize)]
struct WireSummary {
    claim: String,
    #[serde(default)]
    reasons: Vec<WireReason>,
}

#[derive(Deserialize)]
struct WireReason {
    reason_cluster_id: i64,
    reason_text: String,
}

/// Builds the bundle for one claim cluster: member claims ordered by prop
/// id, reason clusters ordered by cluster id with their member texts.
pub fn build_bundle(
    cluster: &ClaimCluster,
    reason_clusters: &[ReasonCluster],
    props: &[Proposition],
) -> ClusterBundle {
    let claims = cluster
        .member_prop_ids
        .iter()
        .map(|&pid| props[pid].claim.clone())
        .collect();
    let reason_clusters = reason_clusters
        .iter()
        .filter(|rc| rc.parent_claim_cluster_id == cluster.cluster_id)
        .map(|rc| BundleReasonCluster {
            reason_cluster_id: rc.cluster_id,
            reasons: rc
                .members
                .iter()
                .map(|r| props[r.prop_id].reasons[r.reason_index].clone())
                .collect(),
            prevalence: rc.members.len(),
        })
        .collect();
    ClusterBundle {
        claim_cluster_id: cluster.cluster_id,
        claims,
        reason_clusters,
    }
}

/// Renders the generation prompt for one bundle. Oversized bundles drop
/// duplicate texts, longest first, until they fit the character budget.
pub fn build_summary_prompt(catalog: &PromptCatalog, bundle: &ClusterBundle) -> String {
    let mut bundle = bundle.clone();
    shrink_to_budget(&mut bundle);
    let input_json = serde_json::to_string_pretty(&bundle).expect("bundle serializes");
    let mut prompt = catalog.render("summary_generation", &[("input_json", &input_json)]);
    if bundle.reason_clusters.is_empty() {
        prompt.push_str(
            "\nThis claim cluster has no reason clusters: summarize the claim only and \
             output an empty \"reasons\" list.\n",
        );
    }
    prompt
}

fn shrink_to_budget(bundle: &mut ClusterBundle) {
    let size = |b: &ClusterBundle| serde_json::to_string(b).map(|s| s.len()).unwrap_or(0);
    while size(bundle) > BUNDLE_CHAR_BUDGET {
        if !drop_longest_duplicate(&mut bundle.claims)
            && !bundle
                .reason_clusters
                .iter_mut()
                .any(|rc| drop_longest_duplicate(&mut rc.reasons))
        {
            log::warn!(
                "bundle for claim cluster {} exceeds the context budget and has no \
                 duplicates left to drop",
                bundle.claim_cluster_id
            );
            break;
        }
        log::warn!(
            "bundle for claim cluster {} over context budget: dropped a duplicate text",
            bundle.claim_cluster_id
        );
    }
}

/// Removes the last instance of the longest text that appears more than
/// once, keeping the earlier occurrence in place.
fn drop_longest_duplicate(texts: &mut Vec<String>) -> bool {
    let mut candidate: Option<usize> = None;
    for (i, t) in texts.iter().enumerate() {
        let duplicated = texts.iter().filter(|o| *o == t).count() > 1;
        if duplicated && candidate.is_none_or(|c| texts[c].len() <= t.len()) {
            candidate = Some(i);
        }
    }
    match candidate {
        Some(i) => {
            texts.remove(i);
            true
        }
        None => false,
    }
}

fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Parses one generation response and verifies its cluster-ID references
/// against the bundle. Returns the violation list on failure so the caller
/// can build a repair prompt.
pub fn parse_summary_output(
    text: &str,
    bundle: &ClusterBundle,
) -> Result<ParsedSummary, Vec<String>> {
    let region = find_json_object(text).ok_or_else(|| vec!["no JSON object found".to_string()])?;
    let wire: WireSummary = serde_json::from_str(region)
        .map_err(|e| vec![format!("JSON did not match the output shape: {e}")])?;

    let mut violations = Vec::new();
    let claim_text = wire.claim.trim().to_string();
    if claim_text.is_empty() {
        violations.push("claim text is empty".to_string());
    }
    check_length("claim", &claim_text, &mut violations);

    let known: Vec<usize> = bundle
        .reason_clusters
        .iter()
        .map(|rc| rc.reason_cluster_id)
        .collect();
    let mut seen = Vec::new();
    let mut reasons = Vec::new();
    for r in wire.reasons {
        let id = r.reason_cluster_id;
        if id < 0 || !known.contains(&(id as usize)) {
            violations.push(format!("unknown reason_cluster_id {id}"));
            continue;
        }
        let id = id as usize;
        if seen.contains(&id) {
            violations.push(format!("reason_cluster_id {id} referenced more than once"));
            continue;
        }
        seen.push(id);
        let reason_text = r.reason_text.trim().to_string();
        if reason_text.is_empty() {
            violations.push(format!("reason text for cluster {id} is empty"));
            continue;
        }
        check_length(&format!("reason {id}"), &reason_text, &mut violations);
        reasons.push((id, reason_text));
    }

    if !violations.is_empty() {
        return Err(violations);
    }
    for id in &known {
        if !seen.contains(id) {
            log::warn!("reason cluster {id} not referenced by the generated summary");
        }
    }
    Ok(ParsedSummary { claim_text, reasons })
}

fn check_length(what: &str, text: &str, violations: &mut Vec<String>) {
    let tokens = token_count(text);
    if tokens > HARD_TOKEN_LIMIT {
        violations.push(format!(
            "{what} is {tokens} tokens, over the hard limit of {HARD_TOKEN_LIMIT}"
        ));
    } else if tokens > SOFT_TOKEN_LIMIT {
        log::warn!("{what} is {tokens} tokens, over the requested {SOFT_TOKEN_LIMIT}");
    }
}

fn find_json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, &b) in bytes[start..].iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + offset + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Repair prompt listing the violations of the previous reply.
pub fn repair_prompt(prompt: &str, violations: &[String]) -> String {
    format!(
        "{prompt}\n\nYour previous reply was invalid: {}. Reply again with only the JSON \
         object described above, referencing only reason_cluster_id values from the input, \
         each at most once.",
        violations.join("; ")
    )
}

/// Generates the structured summary: one backend call per claim cluster
/// (plus at most one repair reprompt each), entries ordered by claim
/// cluster id, prevalence copied from the reason clusters.
pub fn generate_summary(
    gateway: &Gateway,
    catalog: &PromptCatalog,
    claim_clusters: &[ClaimCluster],
    reason_clusters: &[ReasonCluster],
    props: &[Proposition],
) -> Result<GeneratedSummary, SummaryError> {
    let prevalence = quantify(reason_clusters);
    let mut entries = Vec::new();
    let mut failures = Vec::new();

    let mut ordered: Vec<&ClaimCluster> = claim_clusters.iter().collect();
    ordered.sort_by_key(|c| c.cluster_id);

    for cluster in ordered {
        let bundle = build_bundle(cluster, reason_clusters, props);
        match generate_cluster_entry(gateway, catalog, &bundle, &prevalence) {
            Ok(entry) => entries.push(entry),
            Err(failure) => {
                log::warn!(
                    "summary generation failed for claim cluster {}: {}",
                    failure.claim_cluster_id,
                    failure.detail
                );
                failures.push(failure);
            }
        }
    }

    if entries.is_empty() && !failures.is_empty() {
        return Err(SummaryError::AllClustersFailed {
            details: failures.into_iter().map(|f| f.detail).collect(),
        });
    }
    Ok(GeneratedSummary {
        summary: StructuredSummary { entries },
        failures,
    })
}

fn generate_cluster_entry(
    gateway: &Gateway,
    catalog: &PromptCatalog,
    bundle: &ClusterBundle,
    prevalence: &std::collections::BTreeMap<usize, usize>,
) -> Result<SummaryEntry, ClusterFailure> {
    let prompt = build_summary_prompt(catalog, bundle);
    let complete = |p: &str| -> Result<String, ClusterFailure> {
        let req = GenerationRequest::new(p, GENERATION_TEMPERATURE, GENERATION_MAX_TOKENS);
        gateway
            .complete(&req)
            .map(|r| r.text)
            .map_err(|e| ClusterFailure {
                claim_cluster_id: bundle.claim_cluster_id,
                detail: e.to_string(),
                repair_attempts: 0,
            })
    };

    let text = complete(&prompt)?;
    let parsed = match parse_summary_output(&text, bundle) {
        Ok(p) => p,
        Err(violations) => {
            let repaired = complete(&repair_prompt(&prompt, &violations)).map_err(|mut f| {
                f.repair_attempts = 1;
                f
            })?;
            match parse_summary_output(&repaired, bundle) {
                Ok(p) => p,
                Err(violations) => {
                    return Err(ClusterFailure {
                        claim_cluster_id: bundle.claim_cluster_id,
                        detail: SummaryError::InvalidOutput {
                            claim_cluster_id: bundle.claim_cluster_id,
                            violations,
                        }
                        .to_string(),
                        repair_attempts: 1,
                    })
                }
            }
        }
    };

    Ok(SummaryEntry {
        claim_cluster_id: bundle.claim_cluster_id,
        claim_text: parsed.claim_text,
        reasons: parsed
            .reasons
            .into_iter()
            .map(|(reason_cluster_id, reason_text)| SummaryReason {
                reason_cluster_id,
                reason_text,
                prevalence: prevalence[&reason_cluster_id],
            })
            .collect(),
    })
}

/// Output rendering format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummaryFormat {
    /// Human-readable tree: claim roots with reason leaves.
    Tree,
    /// Machine-readable JSON mirroring the data model.
    Machine,
}

pub fn render_summary(summary: &StructuredSummary, format: SummaryFormat) -> String {
    match format {
        SummaryFormat::Tree => {
            let mut out = String::new();
            for entry in &summary.entries {
                out.push_str(&format!("Claim: {}\n", entry.claim_text));
                for reason in &entry.reasons {
                    out.push_str(&format!(
                        "  -> Reason: {} ({} instances)\n",
                        reason.reason_text, reason.prevalence
                    ));
                }
            }
            out
        }
        SummaryFormat::Machine => {
            let mut out = serde_json::to_string_pretty(summary).expect("summary serializes");
            out.push('\n');
            out
        }
    }
}

/// Parses the machine format back into a summary.
pub fn parse_machine_summary(text: &str) -> Result<StructuredSummary, SummaryError> {
    serde_json::from_str(text).map_err(|e| SummaryError::BadMachineFormat(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{ScriptedBackend, TranscriptEntry};
    use crate::model::ReasonRef;
    use crate::prompts::test_catalog;

    fn prop(prop_id: usize, claim: &str, reasons: &[&str]) -> Proposition {
        Proposition {
            prop_id,
            source_comment_id: format!("c{prop_id}"),
            claim: claim.into(),
            reasons: reasons.iter().map(|r| r.to_string()).collect(),
        }
    }

    fn fixture() -> (Vec<Proposition>, Vec<ClaimCluster>, Vec<ReasonCluster>) {
        let props = vec![
            prop(0, "claim zero", &["reason zero"]),
            prop(1, "claim one", &["reason one"]),
            prop(2, "claim two", &[]),
        ];
        let claim_clusters = vec![
            ClaimCluster { cluster_id: 0, member_prop_ids: vec![0, 1] },
            ClaimCluster { cluster_id: 1, member_prop_ids: vec![2] },
        ];
        let reason_clusters = vec![
            ReasonCluster {
                cluster_id: 0,
                parent_claim_cluster_id: 0,
                members: vec![ReasonRef { prop_id: 0, reason_index: 0 }],
            },
            ReasonCluster {
                cluster_id: 1,
                parent_claim_cluster_id: 0,
                members: vec![ReasonRef { prop_id: 1, reason_index: 0 }],
            },
        ];
        (props, claim_clusters, reason_clusters)
    }

    #[test]
    fn bundle_preserves_order_and_ids() {
        let (props, claim_clusters, reason_clusters) = fixture();
        let bundle = build_bundle(&claim_clusters[0], &reason_clusters, &props);
        assert_eq!(bundle.claims, vec!["claim zero", "claim one"]);
        assert_eq!(bundle.reason_clusters.len(), 2);
        assert_eq!(bundle.reason_clusters[0].reason_cluster_id, 0);
        assert_eq!(bundle.reason_clusters[1].reason_cluster_id, 1);
        assert_eq!(bundle.reason_clusters[0].prevalence, 1);
    }

    #[test]
    fn prompt_carries_ids_and_claim_order() {
        let catalog = test_catalog();
        let (props, claim_clusters, reason_clusters) = fixture();
        let bundle = build_bundle(&claim_clusters[0], &reason_clusters, &props);
        let prompt = build_summary_prompt(&catalog, &bundle);
        assert!(prompt.contains("\"reason_cluster_id\": 0"));
        assert!(prompt.contains("\"reason_cluster_id\": 1"));
        let zero = prompt.find("claim zero").unwrap();
        let one = prompt.find("claim one").unwrap();
        assert!(zero < one);
    }

    #[test]
    fn prompt_for_reason_free_bundle_instructs_claim_only() {
        let catalog = test_catalog();
        let (props, claim_clusters, reason_clusters) = fixture();
        let bundle = build_bundle(&claim_clusters[1], &reason_clusters, &props);
        let prompt = build_summary_prompt(&catalog, &bundle);
        assert!(prompt.contains("no reason clusters"));
    }

    fn bundle_with_ids(ids: &[usize]) -> ClusterBundle {
        ClusterBundle {
            claim_cluster_id: 0,
            claims: vec!["c".into()],
            reason_clusters: ids
                .iter()
                .map(|&id| BundleReasonCluster {
                    reason_cluster_id: id,
                    reasons: vec!["r".into()],
                    prevalence: 1,
                })
                .collect(),
        }
    }

    #[test]
    fn parse_accepts_valid_ids() {
        let bundle = bundle_with_ids(&[7, 9]);
        let parsed = parse_summary_output(
            r#"{"claim": "c", "reasons": [{"reason_cluster_id": 7, "reason_text": "a"}, {"reason_cluster_id": 9, "reason_text": "b"}]}"#,
            &bundle,
        )
        .unwrap();
        assert_eq!(parsed.reasons.len(), 2);
    }

    #[test]
    fn parse_rejects_unknown_and_duplicate_ids() {
        let bundle = bundle_with_ids(&[7, 9]);
        let violations = parse_summary_output(
            r#"{"claim": "c", "reasons": [{"reason_cluster_id": 11, "reason_text": "a"}]}"#,
            &bundle,
        )
        .unwrap_err();
        assert!(violations[0].contains("unknown reason_cluster_id 11"));

        let violations = parse_summary_output(
            r#"{"claim": "c", "reasons": [{"reason_cluster_id": 7, "reason_text": "a"}, {"reason_cluster_id": 7, "reason_text": "b"}]}"#,
            &bundle,
        )
        .unwrap_err();
        assert!(violations[0].contains("referenced more than once"));
    }

    #[test]
    fn parse_accepts_soft_limit_overshoot_rejects_hard() {
        let bundle = bundle_with_ids(&[1]);
        let fourteen = "w ".repeat(14).trim().to_string();
        let ok = parse_summary_output(
            &format!(r#"{{"claim": "c", "reasons": [{{"reason_cluster_id": 1, "reason_text": "{fourteen}"}}]}}"#),
            &bundle,
        );
        assert!(ok.is_ok());

        let twentysix = "w ".repeat(26).trim().to_string();
        let violations = parse_summary_output(
            &format!(r#"{{"claim": "c", "reasons": [{{"reason_cluster_id": 1, "reason_text": "{twentysix}"}}]}}"#),
            &bundle,
        )
        .unwrap_err();
        assert!(violations[0].contains("hard limit"));
    }

    #[test]
    fn generate_summary_assembles_entries_with_prevalence() {
        let catalog = test_catalog();
        let (props, claim_clusters, reason_clusters) = fixture();
        let bundle0 = build_bundle(&claim_clusters[0], &reason_clusters, &props);
        let bundle1 = build_bundle(&claim_clusters[1], &reason_clusters, &props);
        let gateway = Gateway::new(Box::new(ScriptedBackend::from_entries(vec![
            TranscriptEntry {
                prompt: build_summary_prompt(&catalog, &bundle0),
                responses: vec![
                    r#"{"claim": "summary zero", "reasons": [{"reason_cluster_id": 0, "reason_text": "sr0"}, {"reason_cluster_id": 1, "reason_text": "sr1"}]}"#.into(),
                ],
            },
            TranscriptEntry {
                prompt: build_summary_prompt(&catalog, &bundle1),
                responses: vec![r#"{"claim": "summary one", "reasons": []}"#.into()],
            },
        ])));

        let generated =
            generate_summary(&gateway, &catalog, &claim_clusters, &reason_clusters, &props)
                .unwrap();
        assert!(generated.failures.is_empty());
        let entries = &generated.summary.entries;
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].reasons[0].prevalence, 1);
        assert_eq!(entries[1].claim_text, "summary one");
        assert!(entries[1].reasons.is_empty());
    }

    #[test]
    fn bad_ids_trigger_one_repair_then_per_cluster_failure() {
        let catalog = test_catalog();
        let (props, claim_clusters, reason_clusters) = fixture();
        let bundle0 = build_bundle(&claim_clusters[0], &reason_clusters, &props);
        let bundle1 = build_bundle(&claim_clusters[1], &reason_clusters, &props);
        let prompt0 = build_summary_prompt(&catalog, &bundle0);
        let bad = r#"{"claim": "c", "reasons": [{"reason_cluster_id": 99, "reason_text": "x"}]}"#;
        let violations = parse_summary_output(bad, &bundle0).unwrap_err();

        let gateway = Gateway::new(Box::new(ScriptedBackend::from_entries(vec![
            TranscriptEntry { prompt: prompt0.clone(), responses: vec![bad.into()] },
            TranscriptEntry {
                prompt: repair_prompt(&prompt0, &violations),
                responses: vec![bad.into()],
            },
            TranscriptEntry {
                prompt: build_summary_prompt(&catalog, &bundle1),
                responses: vec![r#"{"claim": "fine", "reasons": []}"#.into()],
            },
        ])));

        let generated =
            generate_summary(&gateway, &catalog, &claim_clusters, &reason_clusters, &props)
                .unwrap();
        assert_eq!(generated.failures.len(), 1);
        assert_eq!(generated.failures[0].claim_cluster_id, 0);
        assert_eq!(generated.failures[0].repair_attempts, 1);
        // The healthy cluster still produced its entry.
        assert_eq!(generated.summary.entries.len(), 1);
        assert_eq!(generated.summary.entries[0].claim_text, "fine");
        // Original call plus exactly one repair call plus the healthy call.
        assert_eq!(gateway.backend_call_count(), 3);
    }

    #[test]
    fn all_clusters_failing_is_an_error() {
        let catalog = test_catalog();
        let (props, claim_clusters, reason_clusters) = fixture();
        let gateway = Gateway::new(Box::new(ScriptedBackend::from_entries(vec![])));
        let err = generate_summary(&gateway, &catalog, &claim_clusters, &reason_clusters, &props)
            .unwrap_err();
        assert!(matches!(err, SummaryError::AllClustersFailed { .. }));
    }

    #[test]
    fn render_tree_matches_expected_layout() {
        let summary = StructuredSummary {
            entries: vec![
                SummaryEntry {
                    claim_cluster_id: 0,
                    claim_text: "root claim".into(),
                    reasons: vec![
                        SummaryReason {
                            reason_cluster_id: 0,
                            reason_text: "first reason".into(),
                            prevalence: 22,
                        },
                        SummaryReason {
                            reason_cluster_id: 1,
                            reason_text: "second reason".into(),
                            prevalence: 14,
                        },
                    ],
                },
                SummaryEntry {
                    claim_cluster_id: 1,
                    claim_text: "bare claim".into(),
                    reasons: vec![],
                },
            ],
        };
        let tree = render_summary(&summary, SummaryFormat::Tree);
        assert!(tree.contains("Claim: root claim\n"));
        assert!(tree.contains("  -> Reason: first reason (22 instances)\n"));
        assert!(tree.contains("  -> Reason: second reason (14 instances)\n"));
        assert!(tree.contains("Claim: bare claim\n"));
        assert_eq!(tree.lines().count(), 4);
    }

    #[test]
    fn machine_format_round_trips() {
        let summary = StructuredSummary {
            entries: vec![SummaryEntry {
                claim_cluster_id: 3,
                claim_text: "c".into(),
                reasons: vec![SummaryReason {
                    reason_cluster_id: 5,
                    reason_text: "r".into(),
                    prevalence: 2,
                }],
            }],
        };
        let machine = render_summary(&summary, SummaryFormat::Machine);
        let back = parse_machine_summary(&machine).unwrap();
        assert_eq!(summary, back);
    }

    #[test]
    fn oversized_bundles_drop_longest_duplicates() {
        let long = "x".repeat(20_000);
        let mut bundle = ClusterBundle {
            claim_cluster_id: 0,
            claims: vec![long.clone(), "short".into(), long.clone()],
            reason_clusters: vec![],
        };
        shrink_to_budget(&mut bundle);
        assert_eq!(bundle.claims, vec![long, "short".to_string()]);
    }
}
