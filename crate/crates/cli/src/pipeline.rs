//! End-to-end pipeline orchestration with resumable stages.

use crate::artifacts::{
    load_artifact, write_artifact, ClustersArtifact, FailureRecord, PropositionsArtifact,
    Provenance, SummaryArtifact, ThreadClusters, ThreadPropositions, ThreadSummary,
};
use crate::config::PipelineConfig;
use crate::ingest::ingest_dataset;
use anyhow::{Context, Result};
use argquant::clustering::cluster_thread;
use argquant::extraction::extract_propositions;
use argquant::gateway::Gateway;
use argquant::model::{check_partition, check_summary};
use argquant::prompts::PromptCatalog;
use argquant::scoring::ScoringEngine;
use argquant::summary::{generate_summary, render_summary, SummaryFormat};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug)]
pub struct PipelineOutcome {
    pub summary: SummaryArtifact,
    pub stages_run: Vec<&'static str>,
    pub backend_calls: u64,
}

/// One line of the machine-format output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    pub thread_id: String,
    pub topic: String,
    pub entries: Vec<argquant::model::SummaryEntry>,
    pub provenance: Provenance,
}

/// Runs extract, cluster, and generate, writing one artifact per stage.
/// With `resume`, the newest artifact whose config hash matches is picked
/// up and only the remaining stages run.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    input: &Path,
    artifacts_dir: &Path,
    resume: bool,
) -> Result<PipelineOutcome> {
    let prompts = cfg.load_prompts()?;
    let config_hash = cfg.config_hash(&prompts);
    // Input problems must surface before any backend work.
    let threads = ingest_dataset(input, "thread")?;
    let gateway = cfg.build_gateway()?;
    let mut stages_run = Vec::new();

    if resume {
        if let Some(summary) = load_artifact::<SummaryArtifact>(artifacts_dir, &config_hash)? {
            return Ok(PipelineOutcome {
                summary,
                stages_run,
                backend_calls: gateway.backend_call_count(),
            });
        }
    }

    let clusters: Option<ClustersArtifact> = if resume {
        load_artifact(artifacts_dir, &config_hash)?
    } else {
        None
    };

    let clusters = match clusters {
        Some(c) => c,
        None => {
            let props: Option<PropositionsArtifact> = if resume {
                load_artifact(artifacts_dir, &config_hash)?
            } else {
                None
            };
            let props = match props {
                Some(p) => p,
                None => {
                    stages_run.push("extract");
                    run_extract_stage(cfg, &prompts, &gateway, &config_hash, &threads)
                        .and_then(|a| {
                            write_artifact(artifacts_dir, &a)?;
                            Ok(a)
                        })?
                }
            };
            stages_run.push("cluster");
            let clusters = run_cluster_stage(cfg, &prompts, &gateway, &props)?;
            write_artifact(artifacts_dir, &clusters)?;
            clusters
        }
    };

    stages_run.push("summarize");
    let summary = run_summary_stage(&prompts, &gateway, &clusters)?;
    write_artifact(artifacts_dir, &summary)?;

    Ok(PipelineOutcome {
        summary,
        stages_run,
        backend_calls: gateway.backend_call_count(),
    })
}

pub fn run_extract_stage(
    _cfg: &PipelineConfig,
    prompts: &PromptCatalog,
    gateway: &Gateway,
    config_hash: &str,
    threads: &[argquant::model::Thread],
) -> Result<PropositionsArtifact> {
    let mut out = Vec::with_capacity(threads.len());
    for thread in threads {
        let propositions = extract_propositions(gateway, prompts, thread)
            .with_context(|| format!("stage extract failed for thread '{}'", thread.thread_id))?;
        out.push(ThreadPropositions {
            thread: thread.clone(),
            propositions,
        });
    }
    Ok(PropositionsArtifact {
        config_hash: config_hash.to_string(),
        threads: out,
    })
}

pub fn run_cluster_stage(
    cfg: &PipelineConfig,
    prompts: &PromptCatalog,
    gateway: &Gateway,
    props: &PropositionsArtifact,
) -> Result<ClustersArtifact> {
    let engine = ScoringEngine::new(gateway, prompts, cfg.cluster.n_samples)
        .with_batch(cfg.batch_scoring);
    let mut out = Vec::with_capacity(props.threads.len());
    for tp in &props.threads {
        let clustering = cluster_thread(&tp.propositions, &cfg.cluster, &engine)
            .with_context(|| {
                format!("stage cluster failed for thread '{}'", tp.thread.thread_id)
            })?;
        check_partition(
            &clustering.claim_clusters,
            &clustering.reason_clusters,
            &tp.propositions,
        )
        .with_context(|| {
            format!(
                "clustering broke the partition invariant for thread '{}'",
                tp.thread.thread_id
            )
        })?;
        out.push(ThreadClusters {
            thread_id: tp.thread.thread_id.clone(),
            topic: tp.thread.topic.clone(),
            propositions: tp.propositions.clone(),
            clustering,
        });
    }
    Ok(ClustersArtifact {
        config_hash: props.config_hash.clone(),
        threads: out,
    })
}

pub fn run_summary_stage(
    prompts: &PromptCatalog,
    gateway: &Gateway,
    clusters: &ClustersArtifact,
) -> Result<SummaryArtifact> {
    let mut out = Vec::with_capacity(clusters.threads.len());
    for tc in &clusters.threads {
        let generated = generate_summary(
            gateway,
            prompts,
            &tc.clustering.claim_clusters,
            &tc.clustering.reason_clusters,
            &tc.propositions,
        )
        .with_context(|| format!("stage summarize failed for thread '{}'", tc.thread_id))?;
        check_summary(
            &generated.summary,
            &tc.clustering.claim_clusters,
            &tc.clustering.reason_clusters,
        )
        .with_context(|| {
            format!(
                "summary broke a conservation invariant for thread '{}'",
                tc.thread_id
            )
        })?;
        out.push(ThreadSummary {
            thread_id: tc.thread_id.clone(),
            topic: tc.topic.clone(),
            summary: generated.summary,
            provenance: Provenance {
                claim_clusters: tc.clustering.claim_clusters.clone(),
                reason_clusters: tc.clustering.reason_clusters.clone(),
            },
            failures: generated
                .failures
                .into_iter()
                .map(|f| FailureRecord {
                    claim_cluster_id: f.claim_cluster_id,
                    detail: f.detail,
                    repair_attempts: f.repair_attempts,
                })
                .collect(),
        });
    }
    Ok(SummaryArtifact {
        config_hash: clusters.config_hash.clone(),
        threads: out,
    })
}

/// Renders the summary artifact into the output file. Machine format is one
/// JSON record per line mirroring the data model plus provenance; tree
/// format is the human-readable claim/reason tree.
pub fn render_output(artifact: &SummaryArtifact, format: SummaryFormat) -> String {
    match format {
        SummaryFormat::Machine => {
            let mut out = String::new();
            for t in &artifact.threads {
                let record = OutputRecord {
                    thread_id: t.thread_id.clone(),
                    topic: t.topic.clone(),
                    entries: t.summary.entries.clone(),
                    provenance: t.provenance.clone(),
                };
                out.push_str(&serde_json::to_string(&record).expect("record serializes"));
                out.push('\n');
            }
            out
        }
        SummaryFormat::Tree => {
            let mut out = String::new();
            for t in &artifact.threads {
                out.push_str(&format!("Thread {}: {}\n", t.thread_id, t.topic));
                out.push_str(&render_summary(&t.summary, SummaryFormat::Tree));
                out.push('\n');
            }
            out
        }
    }
}

pub fn write_output(
    artifact: &SummaryArtifact,
    path: &Path,
    format: SummaryFormat,
) -> Result<()> {
    std::fs::write(path, render_output(artifact, format))
        .with_context(|| format!("cannot write output {path:?}"))
}

/// Reads a machine-format output file back into records.
pub fn read_output_records(path: &Path) -> Result<Vec<OutputRecord>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read summary file {path:?}"))?;
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: OutputRecord = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: malformed summary record", path.display(), idx + 1))?;
        records.push(record);
    }
    Ok(records)
}
