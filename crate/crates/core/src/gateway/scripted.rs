//! Deterministic scripted backend for tests and offline replay.

use super::{BackendError, GatewayError, GenerationRequest, TextBackend};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::Path;

/// One transcript entry: a full prompt and its canned responses, indexed by
/// `sample_index`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub prompt: String,
    pub responses: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TranscriptFile {
    entries: Vec<TranscriptEntry>,
}

/// Backend that replays canned responses keyed on (prompt hash, sample
/// index). The optional seed rotates which canned response a sample index
/// selects, so one transcript can carry several deterministic sample sets.
pub struct ScriptedBackend {
    entries: HashMap<String, Vec<String>>,
    backend_id: String,
    seed: u32,
}

impl ScriptedBackend {
    pub fn from_entries(entries: Vec<TranscriptEntry>) -> Self {
        let entries = entries
            .into_iter()
            .map(|e| (prompt_key(&e.prompt), e.responses))
            .collect();
        Self {
            entries,
            backend_id: "scripted".to_string(),
            seed: 0,
        }
    }

    /// Loads a transcript file (JSON: `{"entries": [{prompt, responses}]}`).
    pub fn from_transcript_file(path: &Path) -> Result<Self, GatewayError> {
        let data = std::fs::read_to_string(path).map_err(|source| GatewayError::CacheIo {
            path: path.to_path_buf(),
            source,
        })?;
        let file: TranscriptFile = serde_json::from_str(&data)
            .map_err(|e| GatewayError::Permanent(format!("bad transcript {path:?}: {e}")))?;
        Ok(Self::from_entries(file.entries))
    }

    pub fn with_seed(mut self, seed: u32) -> Self {
        self.seed = seed;
        if seed != 0 {
            self.backend_id = format!("scripted#seed={seed}");
        }
        self
    }

    /// Serializes entries back into the transcript file format.
    pub fn transcript_json(entries: &[TranscriptEntry]) -> String {
        let file = TranscriptFile {
            entries: entries.to_vec(),
        };
        let mut out = serde_json::to_string_pretty(&file).expect("transcript serializes");
        out.push('\n');
        out
    }
}

fn prompt_key(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

impl TextBackend for ScriptedBackend {
    fn backend_id(&self) -> &str {
        &self.backend_id
    }

    fn model(&self) -> &str {
        "scripted"
    }

    fn generate(&self, req: &GenerationRequest) -> Result<String, BackendError> {
        let key = prompt_key(&req.prompt);
        let responses = self.entries.get(&key).ok_or_else(|| {
            BackendError::Permanent(GatewayError::NoScriptedResponse {
                key: key.clone(),
                sample_index: req.sample_index,
            })
        })?;
        let index = (self.seed as usize + req.sample_index as usize) % responses.len().max(1);
        responses
            .get(index)
            .cloned()
            .ok_or(BackendError::Permanent(GatewayError::NoScriptedResponse {
                key,
                sample_index: req.sample_index,
            }))
    }
}
