//! Prompt template assets, loaded from a directory and interpolated with
//! `{{placeholder}}` substitution.

use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("missing prompt asset '{name}' at {path}")]
    MissingAsset { name: String, path: PathBuf },
    #[error("prompt asset '{name}' lacks required placeholder '{{{{{placeholder}}}}}'")]
    InvalidTemplate { name: String, placeholder: String },
}

/// Asset names and the placeholders each template must contain.
const ASSETS: &[(&str, &[&str])] = &[
    ("arg_extraction", &["topic", "comment"]),
    ("entailment_pairwise", &["premise", "hypothesis"]),
    ("entailment_batch", &["source", "targets"]),
    ("summary_generation", &["input_json"]),
    ("judge_match", &["level", "generated", "original"]),
    ("judge_support", &["claim", "reason"]),
];

/// All prompt templates used by the pipeline and the judges.
#[derive(Debug, Clone)]
pub struct PromptCatalog {
    templates: BTreeMap<String, String>,
}

impl PromptCatalog {
    /// Loads every asset from `dir` (`<name>.txt` files), validating that the
    /// required placeholders are present.
    pub fn load(dir: &Path) -> Result<Self, PromptError> {
        let mut templates = BTreeMap::new();
        for (name, placeholders) in ASSETS {
            let path = dir.join(format!("{name}.txt"));
            let text = std::fs::read_to_string(&path).map_err(|_| PromptError::MissingAsset {
                name: name.to_string(),
                path: path.clone(),
            })?;
            for ph in *placeholders {
                if !text.contains(&format!("{{{{{ph}}}}}")) {
                    return Err(PromptError::InvalidTemplate {
                        name: name.to_string(),
                        placeholder: ph.to_string(),
                    });
                }
            }
            templates.insert(name.to_string(), text);
        }
        Ok(Self { templates })
    }

    /// Renders the named template, substituting each `{{key}}`.
    pub fn render(&self, name: &str, vars: &[(&str, &str)]) -> String {
        let mut text = self.templates[name].clone();
        for (key, value) in vars {
            text = text.replace(&format!("{{{{{key}}}}}"), value);
        }
        text
    }

    /// Hash over all template contents; part of the pipeline config hash so
    /// cached artifacts are invalidated when a template changes.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (name, text) in &self.templates {
            hasher.update(name.as_bytes());
            hasher.update([0x1f]);
            hasher.update(text.as_bytes());
            hasher.update([0x1f]);
        }
        hex::encode(hasher.finalize())
    }
}

#[cfg(test)]
pub(crate) fn test_catalog() -> PromptCatalog {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../prompts");
    PromptCatalog::load(&dir).expect("workspace prompt assets load")
}
