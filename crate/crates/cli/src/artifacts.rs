//! Self-describing stage artifacts. Each file embeds the config hash it was
//! produced under; resume refuses artifacts whose hash differs.

use anyhow::{bail, Context, Result};
use argquant::clustering::ThreadClustering;
use argquant::model::{ClaimCluster, Proposition, ReasonCluster, StructuredSummary, Thread};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const PROPOSITIONS_FILE: &str = "01_propositions.json";
pub const CLUSTERS_FILE: &str = "02_clusters.json";
pub const SUMMARY_FILE: &str = "03_summary.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropositionsArtifact {
    pub config_hash: String,
    pub threads: Vec<ThreadPropositions>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThreadPropositions {
    pub thread: Thread,
    pub propositions: Vec<Proposition>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClustersArtifact {
    pub config_hash: String,
    pub threads: Vec<ThreadClusters>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThreadClusters {
    pub thread_id: String,
    pub topic: String,
    pub propositions: Vec<Proposition>,
    pub clustering: ThreadClustering,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryArtifact {
    pub config_hash: String,
    pub threads: Vec<ThreadSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThreadSummary {
    pub thread_id: String,
    pub topic: String,
    pub summary: StructuredSummary,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<FailureRecord>,
}

/// Member refs per cluster, carried alongside the summary for audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub claim_clusters: Vec<ClaimCluster>,
    pub reason_clusters: Vec<ReasonCluster>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureRecord {
    pub claim_cluster_id: usize,
    pub detail: String,
    pub repair_attempts: u32,
}

pub trait StageArtifact: Serialize + DeserializeOwned {
    const FILE_NAME: &'static str;
    fn config_hash(&self) -> &str;
}

impl StageArtifact for PropositionsArtifact {
    const FILE_NAME: &'static str = PROPOSITIONS_FILE;
    fn config_hash(&self) -> &str {
        &self.config_hash
    }
}

impl StageArtifact for ClustersArtifact {
    const FILE_NAME: &'static str = CLUSTERS_FILE;
    fn config_hash(&self) -> &str {
        &self.config_hash
    }
}

impl StageArtifact for SummaryArtifact {
    const FILE_NAME: &'static str = SUMMARY_FILE;
    fn config_hash(&self) -> &str {
        &self.config_hash
    }
}

pub fn artifact_path<A: StageArtifact>(dir: &Path) -> PathBuf {
    dir.join(A::FILE_NAME)
}

pub fn write_artifact<A: StageArtifact>(dir: &Path, artifact: &A) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create artifacts dir {dir:?}"))?;
    let path = artifact_path::<A>(dir);
    let mut json = serde_json::to_string_pretty(artifact)?;
    json.push('\n');
    std::fs::write(&path, json).with_context(|| format!("cannot write artifact {path:?}"))?;
    Ok(path)
}

/// Loads an artifact if present, verifying its config hash. A present file
/// with a mismatched hash is an error; an absent file is `None`.
pub fn load_artifact<A: StageArtifact>(dir: &Path, config_hash: &str) -> Result<Option<A>> {
    let path = artifact_path::<A>(dir);
    if !path.is_file() {
        return Ok(None);
    }
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("cannot read {path:?}"))?;
    let artifact: A =
        serde_json::from_str(&text).with_context(|| format!("bad artifact {path:?}"))?;
    if artifact.config_hash() != config_hash {
        bail!(
            "artifact {path:?} was produced under config hash {}, current is {config_hash}; \
             delete the artifacts or re-run without --resume",
            artifact.config_hash()
        );
    }
    Ok(Some(artifact))
}
