//! Uniform interface to text-generation backends.
//!
//! A [`Gateway`] wraps a backend with retries and an optional
//! content-addressed response cache (a directory of files named by the
//! request key). With a warm cache every call replays identically and makes
//! zero backend calls, which is what makes pipeline runs reproducible.

mod http;
mod scripted;

pub use http::HttpBackend;
pub use scripted::{ScriptedBackend, TranscriptEntry};

use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;
use thiserror::Error;

/// One generation request. `sample_index` distinguishes repeated samples of
/// the same prompt so sampled runs replay deterministically from cache.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub sample_index: u32,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, temperature: f64, max_tokens: u32) -> Self {
        Self {
            prompt: prompt.into(),
            temperature,
            max_tokens,
            sample_index: 0,
        }
    }

    pub fn with_sample_index(mut self, sample_index: u32) -> Self {
        self.sample_index = sample_index;
        self
    }
}

/// A backend response, text exactly as returned.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendResponse {
    pub text: String,
    pub backend_id: String,
    pub cached: bool,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("empty prompt")]
    EmptyPrompt,
    #[error("no scripted response for request key {key} (sample {sample_index})")]
    NoScriptedResponse { key: String, sample_index: u32 },
    #[error("backend unreachable after {attempts} attempts: {last_error}")]
    RetriesExhausted { attempts: u32, last_error: String },
    #[error("backend request failed: {0}")]
    Permanent(String),
    #[error("missing API credentials: set {0}")]
    MissingCredentials(String),
    #[error("cache io error at {path}: {source}")]
    CacheIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Transient errors are retried, permanent ones are not.
#[derive(Debug)]
pub enum BackendError {
    Transient(String),
    Permanent(GatewayError),
}

pub trait TextBackend: Send + Sync {
    /// Stable identifier used in cache keys.
    fn backend_id(&self) -> &str;
    fn model(&self) -> &str;
    fn generate(&self, req: &GenerationRequest) -> Result<String, BackendError>;
}

/// Retry policy for transient backend failures.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

/// Backend wrapper with caching, retries, and a call counter.
pub struct Gateway {
    backend: Box<dyn TextBackend>,
    cache_dir: Option<PathBuf>,
    retry: RetryPolicy,
    backend_calls: AtomicU64,
}

impl Gateway {
    pub fn new(backend: Box<dyn TextBackend>) -> Self {
        Self {
            backend,
            cache_dir: None,
            retry: RetryPolicy::default(),
            backend_calls: AtomicU64::new(0),
        }
    }

    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn backend_id(&self) -> &str {
        self.backend.backend_id()
    }

    /// Number of requests that actually reached the backend (cache misses).
    pub fn backend_call_count(&self) -> u64 {
        self.backend_calls.load(Ordering::Relaxed)
    }

    /// Cache key: hash of (backend_id, model, prompt, temperature,
    /// max_tokens, sample_index).
    pub fn request_key(&self, req: &GenerationRequest) -> String {
        let mut hasher = Sha256::new();
        for part in [
            self.backend.backend_id(),
            self.backend.model(),
            &req.prompt,
            &format!("{}", req.temperature),
            &format!("{}", req.max_tokens),
            &format!("{}", req.sample_index),
        ] {
            hasher.update(part.as_bytes());
            hasher.update([0x1f]);
        }
        hex::encode(hasher.finalize())
    }

    /// Completes one request, consulting the cache first.
    pub fn complete(&self, req: &GenerationRequest) -> Result<BackendResponse, GatewayError> {
        if req.prompt.is_empty() {
            return Err(GatewayError::EmptyPrompt);
        }
        let key = self.request_key(req);
        if let Some(dir) = &self.cache_dir {
            let path = dir.join(&key);
            if path.is_file() {
                let text = std::fs::read_to_string(&path)
                    .map_err(|source| GatewayError::CacheIo { path, source })?;
                return Ok(BackendResponse {
                    text,
                    backend_id: self.backend.backend_id().to_string(),
                    cached: true,
                });
            }
        }

        let text = self.generate_with_retries(req)?;
        if let Some(dir) = &self.cache_dir {
            write_cache_entry(dir, &key, &text)?;
        }
        Ok(BackendResponse {
            text,
            backend_id: self.backend.backend_id().to_string(),
            cached: false,
        })
    }

    /// Draws `n` samples of the same prompt, `sample_index` 0..n-1.
    pub fn sample_n(
        &self,
        prompt: &str,
        n: u32,
        temperature: f64,
        max_tokens: u32,
    ) -> Result<Vec<String>, GatewayError> {
        (0..n)
            .map(|i| {
                let req = GenerationRequest::new(prompt, temperature, max_tokens)
                    .with_sample_index(i);
                self.complete(&req).map(|r| r.text)
            })
            .collect()
    }

    fn generate_with_retries(&self, req: &GenerationRequest) -> Result<String, GatewayError> {
        let mut last_error = String::new();
        for attempt in 0..=self.retry.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.retry.base_delay * 2u32.pow(attempt - 1));
            }
            self.backend_calls.fetch_add(1, Ordering::Relaxed);
            match self.backend.generate(req) {
                Ok(text) => return Ok(text),
                Err(BackendError::Permanent(e)) => return Err(e),
                Err(BackendError::Transient(e)) => last_error = e,
            }
        }
        Err(GatewayError::RetriesExhausted {
            attempts: self.retry.max_retries + 1,
            last_error,
        })
    }
}

/// Writes one cache entry atomically (temp file + rename), so concurrent
/// writers of the same key cannot leave a torn file behind.
fn write_cache_entry(dir: &Path, key: &str, text: &str) -> Result<(), GatewayError> {
    std::fs::create_dir_all(dir).map_err(|source| GatewayError::CacheIo {
        path: dir.to_path_buf(),
        source,
    })?;
    let tmp = dir.join(format!(".{key}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, text).map_err(|source| GatewayError::CacheIo {
        path: tmp.clone(),
        source,
    })?;
    let path = dir.join(key);
    std::fs::rename(&tmp, &path).map_err(|source| GatewayError::CacheIo { path, source })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    /// Backend that fails transiently a fixed number of times, then succeeds.
    struct FlakyBackend {
        failures_left: Mutex<u32>,
    }

    impl TextBackend for FlakyBackend {
        fn backend_id(&self) -> &str {
            "flaky"
        }
        fn model(&self) -> &str {
            "test"
        }
        fn generate(&self, _req: &GenerationRequest) -> Result<String, BackendError> {
            let mut left = self.failures_left.lock().unwrap();
            if *left > 0 {
                *left -= 1;
                Err(BackendError::Transient("connection reset".into()))
            } else {
                Ok("ok".into())
            }
        }
    }

    fn fast_retry() -> RetryPolicy {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(1),
        }
    }

    #[test]
    fn scripted_lookup_and_miss() {
        let backend = ScriptedBackend::from_entries(vec![TranscriptEntry {
            prompt: "p".into(),
            responses: vec!["fixture text".into()],
        }]);
        let gw = Gateway::new(Box::new(backend));
        let resp = gw.complete(&GenerationRequest::new("p", 0.0, 16)).unwrap();
        assert_eq!(resp.text, "fixture text");
        assert!(!resp.cached);

        let err = gw
            .complete(&GenerationRequest::new("unknown", 0.0, 16))
            .unwrap_err();
        assert!(err.to_string().contains("no scripted response"));
    }

    #[test]
    fn cache_hit_marks_response_and_skips_backend() {
        let dir = tempfile::tempdir().unwrap();
        let backend = ScriptedBackend::from_entries(vec![TranscriptEntry {
            prompt: "p".into(),
            responses: vec!["v".into()],
        }]);
        let gw = Gateway::new(Box::new(backend)).with_cache_dir(dir.path());
        let req = GenerationRequest::new("p", 0.0, 16);

        let first = gw.complete(&req).unwrap();
        assert!(!first.cached);
        assert_eq!(gw.backend_call_count(), 1);

        let second = gw.complete(&req).unwrap();
        assert!(second.cached);
        assert_eq!(second.text, first.text);
        assert_eq!(gw.backend_call_count(), 1);
    }

    #[test]
    fn sample_n_uses_index_as_discriminator() {
        let backend = ScriptedBackend::from_entries(vec![TranscriptEntry {
            prompt: "p".into(),
            responses: vec!["a".into(), "b".into(), "c".into()],
        }]);
        let gw = Gateway::new(Box::new(backend));
        let texts = gw.sample_n("p", 3, 1.0, 16).unwrap();
        assert_eq!(texts, vec!["a", "b", "c"]);

        let single = gw.sample_n("p", 1, 1.0, 16).unwrap();
        assert_eq!(single, vec!["a"]);
    }

    #[test]
    fn sample_n_replays_from_cache_with_zero_calls() {
        let dir = tempfile::tempdir().unwrap();
        let entries = vec![TranscriptEntry {
            prompt: "p".into(),
            responses: vec!["a".into(), "b".into()],
        }];
        let gw = Gateway::new(Box::new(ScriptedBackend::from_entries(entries.clone())))
            .with_cache_dir(dir.path());
        let first = gw.sample_n("p", 2, 1.0, 16).unwrap();
        assert_eq!(gw.backend_call_count(), 2);

        // Fresh gateway over an empty backend: everything must come from cache.
        let gw2 = Gateway::new(Box::new(ScriptedBackend::from_entries(vec![])))
            .with_cache_dir(dir.path());
        let second = gw2.sample_n("p", 2, 1.0, 16).unwrap();
        assert_eq!(first, second);
        assert_eq!(gw2.backend_call_count(), 0);
    }

    #[test]
    fn transient_failures_are_retried_then_succeed() {
        let gw = Gateway::new(Box::new(FlakyBackend {
            failures_left: Mutex::new(2),
        }))
        .with_retry(fast_retry());
        let resp = gw.complete(&GenerationRequest::new("p", 0.0, 16)).unwrap();
        assert_eq!(resp.text, "ok");
        assert_eq!(gw.backend_call_count(), 3);
    }

    #[test]
    fn retries_exhaust_into_error() {
        let gw = Gateway::new(Box::new(FlakyBackend {
            failures_left: Mutex::new(10),
        }))
        .with_retry(fast_retry());
        let err = gw
            .complete(&GenerationRequest::new("p", 0.0, 16))
            .unwrap_err();
        assert!(matches!(err, GatewayError::RetriesExhausted { attempts: 4, .. }));
    }

    #[test]
    fn request_key_distinguishes_all_fields() {
        let gw = Gateway::new(Box::new(ScriptedBackend::from_entries(vec![])));
        let base = GenerationRequest::new("p", 1.0, 16);
        let k0 = gw.request_key(&base);
        assert_ne!(k0, gw.request_key(&GenerationRequest::new("q", 1.0, 16)));
        assert_ne!(k0, gw.request_key(&GenerationRequest::new("p", 0.0, 16)));
        assert_ne!(k0, gw.request_key(&GenerationRequest::new("p", 1.0, 32)));
        assert_ne!(k0, gw.request_key(&base.clone().with_sample_index(1)));
        assert_eq!(k0, gw.request_key(&base));
    }

    #[test]
    fn empty_prompt_is_rejected() {
        let gw = Gateway::new(Box::new(ScriptedBackend::from_entries(vec![])));
        assert!(matches!(
            gw.complete(&GenerationRequest::new("", 0.0, 16)),
            Err(GatewayError::EmptyPrompt)
        ));
    }
}
