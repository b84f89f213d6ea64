//! Blocking JSON-over-HTTP transport shared by the remote chat backend and
//! the model-scorer sidecar client.

use std::time::Duration;

use serde_json::Value;

use super::LlmError;

#[derive(Debug, Clone)]
pub struct JsonHttp {
    client: reqwest::blocking::Client,
}

impl JsonHttp {
    pub fn new(timeout: Duration) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(JsonHttp { client })
    }

    /// POST a JSON body; non-2xx statuses become [`LlmError::Status`].
    pub fn post_json(&self, url: &str, body: &Value, bearer: Option<&str>) -> Result<Value, LlmError> {
        tracing::trace!(target: "tootsim::http", %url, request = %body, "POST");
        let mut req = self.client.post(url).json(body);
        if let Some(token) = bearer {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| LlmError::Transport(e.to_string()))?;
        Self::finish(url, resp)
    }

    pub fn get_json(&self, url: &str) -> Result<Value, LlmError> {
        tracing::trace!(target: "tootsim::http", %url, "GET");
        let resp = self
            .client
            .get(url)
            .send()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Self::finish(url, resp)
    }

    fn finish(url: &str, resp: reqwest::blocking::Response) -> Result<Value, LlmError> {
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| LlmError::Transport(e.to_string()))?;
        tracing::trace!(target: "tootsim::http", %url, status, response = %text, "response");
        if !(200..300).contains(&status) {
            return Err(LlmError::Status { status, body: text });
        }
        serde_json::from_str(&text).map_err(|e| LlmError::BadResponse(e.to_string()))
    }
}
