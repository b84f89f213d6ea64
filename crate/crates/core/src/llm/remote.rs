use std::time::Duration;

use serde_json::{json, Value};

use super::http::JsonHttp;
use super::{ChatBackend, ChatRequest, LlmError};

/// Connection settings. The key only ever comes from the environment.
#[derive(Clone)]
pub struct RemoteConfig {
    pub base_url: String,
    pub api_key: String,
    pub model: String,
    pub timeout: Duration,
}

impl std::fmt::Debug for RemoteConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteConfig")
            .field("base_url", &self.base_url)
            .field("api_key", &"<redacted>")
            .field("model", &self.model)
            .finish()
    }
}

impl RemoteConfig {
    pub const ENV_BASE_URL: &'static str = "API_BASE_URL";
    pub const ENV_API_KEY: &'static str = "API_KEY";
    pub const ENV_MODEL: &'static str = "MODEL_NAME";

    pub fn from_env() -> Result<Self, LlmError> {
        let var = |name: &str| {
            std::env::var(name).map_err(|_| LlmError::Config(format!("environment variable {name} is not set")))
        };
        Ok(RemoteConfig {
            base_url: var(Self::ENV_BASE_URL)?,
            api_key: std::env::var(Self::ENV_API_KEY).unwrap_or_default(),
            model: var(Self::ENV_MODEL)?,
            timeout: Duration::from_secs(120),
        })
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

/// One HTTP call per completion; retries live in the budget wrapper.
#[derive(Debug, Clone)]
pub struct RemoteBackend {
    config: RemoteConfig,
    http: JsonHttp,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, LlmError> {
        let http = JsonHttp::new(config.timeout)?;
        Ok(RemoteBackend { config, http })
    }

    pub fn request_body(&self, request: &ChatRequest) -> Value {
        json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "stream": false,
        })
    }
}

impl ChatBackend for RemoteBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let key = (!self.config.api_key.is_empty()).then_some(self.config.api_key.as_str());
        let resp = self
            .http
            .post_json(&self.config.endpoint(), &self.request_body(request), key)?;
        resp.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| LlmError::BadResponse("missing choices[0].message.content".into()))
    }

    fn is_remote(&self) -> bool {
        true
    }
}
