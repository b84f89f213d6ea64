use std::time::Duration;

use serde_json::{json, Value};

use super::http::JsonHttp;
use super::LlmError;

/// Client for the model-scorer service: `POST /similarity`, `POST /nli`
/// and `GET /health`.
#[derive(Debug, Clone)]
pub struct SidecarClient {
    base_url: String,
    http: JsonHttp,
}

impl SidecarClient {
    pub fn new(base_url: impl Into<String>) -> Result<Self, LlmError> {
        Self::with_timeout(base_url, Duration::from_secs(60))
    }

    pub fn with_timeout(base_url: impl Into<String>, timeout: Duration) -> Result<Self, LlmError> {
        let base_url = base_url.into().trim_end_matches('/').to_string();
        if base_url.is_empty() {
            return Err(LlmError::Config("sidecar URL is empty".into()));
        }
        Ok(SidecarClient {
            base_url,
            http: JsonHttp::new(timeout)?,
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// Health document, including the model identifiers in use.
    pub fn health(&self) -> Result<Value, LlmError> {
        self.http.get_json(&format!("{}/health", self.base_url))
    }

    pub fn similarity(&self, candidate: &str, reference: &str) -> Result<f64, LlmError> {
        let body = json!({"candidate": candidate, "reference": reference});
        let resp = self
            .http
            .post_json(&format!("{}/similarity", self.base_url), &body, None)?;
        let score = resp
            .get("score")
            .and_then(Value::as_f64)
            .ok_or_else(|| LlmError::BadResponse(format!("similarity response without numeric score: {resp}")))?;
        Ok(score.clamp(0.0, 1.0))
    }

    /// Raw NLI label as returned by the service.
    pub fn nli(&self, premise: &str, hypothesis: &str) -> Result<String, LlmError> {
        let body = json!({"premise": premise, "hypothesis": hypothesis});
        let resp = self.http.post_json(&format!("{}/nli", self.base_url), &body, None)?;
        resp.get("label")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| LlmError::BadResponse(format!("nli response without label: {resp}")))
    }
}
