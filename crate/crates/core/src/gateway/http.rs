//! HTTP backend speaking the OpenAI-style chat completions protocol.

use super::{BackendError, GatewayError, GenerationRequest, TextBackend};
use serde::Deserialize;
use std::time::Duration;

pub const API_KEY_ENV: &str = "ARGQUANT_API_KEY";
pub const BASE_URL_ENV: &str = "ARGQUANT_BASE_URL";
const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

pub struct HttpBackend {
    client: reqwest::blocking::Client,
    base_url: String,
    model: String,
    api_key: String,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl HttpBackend {
    /// Builds a backend for `model`, reading credentials from the
    /// environment (`ARGQUANT_API_KEY`, optional `ARGQUANT_BASE_URL`).
    pub fn from_env(model: impl Into<String>) -> Result<Self, GatewayError> {
        let api_key = std::env::var(API_KEY_ENV)
            .map_err(|_| GatewayError::MissingCredentials(API_KEY_ENV.to_string()))?;
        let base_url =
            std::env::var(BASE_URL_ENV).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| GatewayError::Permanent(format!("http client build failed: {e}")))?;
        Ok(Self {
            client,
            base_url,
            model: model.into(),
            api_key,
        })
    }
}

impl TextBackend for HttpBackend {
    fn backend_id(&self) -> &str {
        "http"
    }

    fn model(&self) -> &str {
        &self.model
    }

    fn generate(&self, req: &GenerationRequest) -> Result<String, BackendError> {
        let url = format!("{}/chat/completions", self.base_url.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        let resp = self
            .client
            .post(&url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| BackendError::Transient(format!("transport: {e}")))?;

        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(BackendError::Transient(format!("http status {status}")));
        }
        if !status.is_success() {
            let detail = resp.text().unwrap_or_default();
            return Err(BackendError::Permanent(GatewayError::Permanent(format!(
                "http status {status}: {detail}"
            ))));
        }
        let parsed: ChatResponse = resp
            .json()
            .map_err(|e| BackendError::Transient(format!("bad response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| {
                BackendError::Permanent(GatewayError::Permanent("response had no choices".into()))
            })
    }
}
