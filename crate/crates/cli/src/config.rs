//! Pipeline configuration: defaults, config file, CLI flag precedence, and
//! the config hash embedded into stage artifacts.

use anyhow::{bail, Context, Result};
use argquant::clustering::ClusterConfig;
use argquant::gateway::{Gateway, HttpBackend, ScriptedBackend};
use argquant::prompts::PromptCatalog;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Scripted,
    Http,
}

impl std::str::FromStr for BackendKind {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scripted" => Ok(Self::Scripted),
            "http" => Ok(Self::Http),
            other => bail!("unknown backend '{other}' (expected scripted or http)"),
        }
    }
}

/// Per-stage temperatures. Only scoring samples; the other stages stay
/// deterministic at 0, matching the constants in the library stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTemperatures {
    pub extraction: f64,
    pub scoring: f64,
    pub generation: f64,
    pub judging: f64,
}

impl Default for StageTemperatures {
    fn default() -> Self {
        Self {
            extraction: 0.0,
            scoring: 1.0,
            generation: 0.0,
            judging: 0.0,
        }
    }
}

/// Fully resolved pipeline configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub backend: BackendKind,
    pub model: String,
    /// Transcript file for the scripted backend.
    pub transcript: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub prompts_dir: PathBuf,
    pub cluster: ClusterConfig,
    pub temperatures: StageTemperatures,
    pub batch_scoring: bool,
    /// Scripted-backend sample-set selection.
    pub seed: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Scripted,
            model: "gpt-4.1".to_string(),
            transcript: None,
            cache_dir: None,
            prompts_dir: PathBuf::from("prompts"),
            cluster: ClusterConfig::default(),
            temperatures: StageTemperatures::default(),
            batch_scoring: false,
            seed: 0,
        }
    }
}

/// Config file shape: every field optional, overridden by CLI flags.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct ConfigFile {
    pub backend: Option<BackendKind>,
    pub model: Option<String>,
    pub transcript: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub prompts_dir: Option<PathBuf>,
    pub tau: Option<f64>,
    pub t_support: Option<f64>,
    pub samples: Option<u32>,
    pub batch_scoring: Option<bool>,
    pub seed: Option<u32>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {path:?}"))?;
        toml::from_str(&text).with_context(|| format!("bad config file {path:?}"))
    }
}

/// Flag-level overrides (CLI flags beat the config file, which beats
/// defaults).
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub backend: Option<BackendKind>,
    pub model: Option<String>,
    pub transcript: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub prompts_dir: Option<PathBuf>,
    pub tau: Option<f64>,
    pub t_support: Option<f64>,
    pub samples: Option<u32>,
    pub batch_scoring: Option<bool>,
    pub seed: Option<u32>,
}

impl PipelineConfig {
    /// Resolves defaults, then the config file, then CLI flags.
    pub fn resolve(file: Option<ConfigFile>, flags: ConfigOverrides) -> Result<Self> {
        let mut cfg = Self::default();
        let file = file.unwrap_or_default();

        cfg.backend = flags.backend.or(file.backend).unwrap_or(cfg.backend);
        cfg.model = flags.model.or(file.model).unwrap_or(cfg.model);
        cfg.transcript = flags.transcript.or(file.transcript).or(cfg.transcript);
        cfg.cache_dir = flags.cache_dir.or(file.cache_dir).or(cfg.cache_dir);
        cfg.prompts_dir = flags
            .prompts_dir
            .or(file.prompts_dir)
            .unwrap_or(cfg.prompts_dir);
        cfg.cluster.tau = flags.tau.or(file.tau).unwrap_or(cfg.cluster.tau);
        cfg.cluster.t_support = flags
            .t_support
            .or(file.t_support)
            .unwrap_or(cfg.cluster.t_support);
        cfg.cluster.n_samples = flags
            .samples
            .or(file.samples)
            .unwrap_or(cfg.cluster.n_samples);
        cfg.batch_scoring = flags
            .batch_scoring
            .or(file.batch_scoring)
            .unwrap_or(cfg.batch_scoring);
        cfg.seed = flags.seed.or(file.seed).unwrap_or(cfg.seed);

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cluster.tau) {
            bail!("tau {} out of [0, 1]", self.cluster.tau);
        }
        if !(0.0..=1.0).contains(&self.cluster.t_support) {
            bail!("t-support {} out of [0, 1]", self.cluster.t_support);
        }
        if self.cluster.n_samples == 0 {
            bail!("samples must be at least 1");
        }
        if self.backend == BackendKind::Scripted && self.transcript.is_none() {
            bail!("the scripted backend needs --transcript <file>");
        }
        Ok(())
    }

    pub fn load_prompts(&self) -> Result<PromptCatalog> {
        PromptCatalog::load(&self.prompts_dir).map_err(Into::into)
    }

    /// Builds the gateway for this configuration.
    pub fn build_gateway(&self) -> Result<Gateway> {
        let gateway = match self.backend {
            BackendKind::Scripted => {
                let path = self
                    .transcript
                    .as_ref()
                    .context("the scripted backend needs --transcript <file>")?;
                let backend = ScriptedBackend::from_transcript_file(path)?.with_seed(self.seed);
                Gateway::new(Box::new(backend))
            }
            BackendKind::Http => {
                let backend = HttpBackend::from_env(self.model.clone())?;
                Gateway::new(Box::new(backend))
            }
        };
        Ok(match &self.cache_dir {
            Some(dir) => gateway.with_cache_dir(dir),
            None => gateway,
        })
    }

    /// Hash over the semantically relevant configuration plus the prompt
    /// template contents. Paths are excluded so artifacts stay portable.
    pub fn config_hash(&self, prompts: &PromptCatalog) -> String {
        let semantic = serde_json::json!({
            "backend": self.backend,
            "model": self.model,
            "tau": self.cluster.tau,
            "t_support": self.cluster.t_support,
            "n_samples": self.cluster.n_samples,
            "temperatures": self.temperatures,
            "batch_scoring": self.batch_scoring,
            "seed": self.seed,
            "prompts": prompts.content_hash(),
        });
        let mut hasher = Sha256::new();
        hasher.update(semantic.to_string().as_bytes());
        hex::encode(hasher.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beats_defaults() {
        let file = ConfigFile {
            tau: Some(0.6),
            samples: Some(3),
            model: Some("from-file".into()),
            transcript: Some(PathBuf::from("t.json")),
            ..Default::default()
        };
        let flags = ConfigOverrides {
            tau: Some(0.7),
            ..Default::default()
        };
        let cfg = PipelineConfig::resolve(Some(file), flags).unwrap();
        assert_eq!(cfg.cluster.tau, 0.7);
        assert_eq!(cfg.cluster.n_samples, 3);
        assert_eq!(cfg.model, "from-file");
        assert_eq!(cfg.cluster.t_support, 0.5);
    }

    #[test]
    fn out_of_range_thresholds_are_rejected() {
        let flags = ConfigOverrides {
            tau: Some(1.5),
            transcript: Some(PathBuf::from("t.json")),
            ..Default::default()
        };
        assert!(PipelineConfig::resolve(None, flags).is_err());
    }

    #[test]
    fn scripted_backend_requires_transcript() {
        assert!(PipelineConfig::resolve(None, ConfigOverrides::default()).is_err());
    }

    #[test]
    fn stage_temperatures_match_library_constants() {
        let t = StageTemperatures::default();
        assert_eq!(t.extraction, argquant::extraction::EXTRACTION_TEMPERATURE);
        assert_eq!(t.scoring, argquant::scoring::SCORING_TEMPERATURE);
        assert_eq!(t.generation, argquant::summary::GENERATION_TEMPERATURE);
    }

    #[test]
    fn config_hash_ignores_paths_but_tracks_thresholds() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../prompts");
        let prompts = PromptCatalog::load(&dir).unwrap();
        let mut a = PipelineConfig {
            transcript: Some(PathBuf::from("a.json")),
            ..Default::default()
        };
        let b = PipelineConfig {
            transcript: Some(PathBuf::from("elsewhere.json")),
            cache_dir: Some(PathBuf::from("/tmp/x")),
            ..Default::default()
        };
        assert_eq!(a.config_hash(&prompts), b.config_hash(&prompts));
        a.cluster.tau = 0.7;
        assert_ne!(a.config_hash(&prompts), b.config_hash(&prompts));
    }
}
