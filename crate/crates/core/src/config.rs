//! Run configuration: a single JSON document with defaults for every key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::llm::{BackendKind, HeuristicThresholds};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_initial: usize,
    pub n_regular: usize,
    pub posts_per_initial: usize,
    /// Turns (hours) per stage.
    pub stage_hours: u64,
    /// Posts fetched per browsing session.
    pub session_size: usize,
    pub alpha: f64,
    pub x_min: f64,
    pub t_k: f64,
    pub t_p: f64,
    pub knowledge_k: usize,
    pub topic_batch: usize,
    pub seed: u64,
    pub backend: BackendKind,
    /// Fixture table for the scripted backend.
    pub fixtures: Option<PathBuf>,
    /// Knowledge corpus (JSON Lines of `{title, text}`).
    pub knowledge: Option<PathBuf>,
    /// Persona seed file; personas are enriched at run start.
    pub persona_seeds: Option<PathBuf>,
    /// Directory of already enriched personas, used instead of seeds.
    pub persona_store: Option<PathBuf>,
    /// Iterate agents in a seeded random order each turn.
    pub shuffle_agents: bool,
    /// Keep every completion so the run can be replayed offline.
    pub record_completions: bool,
    pub max_inflight: usize,
    pub max_attempts: u32,
    pub heuristic: HeuristicThresholds,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_initial: 150,
            n_regular: 300,
            posts_per_initial: 7,
            stage_hours: 168,
            session_size: crate::planning::DEFAULT_SESSION_SIZE,
            alpha: crate::planning::DEFAULT_ALPHA,
            x_min: crate::planning::DEFAULT_X_MIN,
            t_k: crate::persona::DEFAULT_T_K,
            t_p: 0.80,
            knowledge_k: crate::persona::DEFAULT_KNOWLEDGE_K,
            topic_batch: 7,
            seed: 42,
            backend: BackendKind::Heuristic,
            fixtures: None,
            knowledge: None,
            persona_seeds: None,
            persona_store: None,
            shuffle_agents: false,
            record_completions: false,
            max_inflight: 8,
            max_attempts: 5,
            heuristic: HeuristicThresholds::default(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "n_initial",
    "n_regular",
    "posts_per_initial",
    "stage_hours",
    "session_size",
    "alpha",
    "x_min",
    "t_k",
    "t_p",
    "knowledge_k",
    "topic_batch",
    "seed",
    "backend",
    "fixtures",
    "knowledge",
    "persona_seeds",
    "persona_store",
    "shuffle_agents",
    "record_completions",
    "max_inflight",
    "max_attempts",
    "heuristic",
];

const PATH_KEYS: &[&str] = &["fixtures", "knowledge", "persona_seeds", "persona_store"];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config is not a JSON object: {0}")]
    Syntax(String),
    #[error("unknown config key {key:?}{}", suggestion.as_ref().map(|s| format!(", did you mean {s:?}?")).unwrap_or_default())]
    UnknownKey { key: String, suggestion: Option<String> },
    #[error("config key {key:?}: {message}")]
    Type { key: String, message: String },
    #[error("config key {key:?} points to a missing path: {}", path.display())]
    MissingPath { key: String, path: PathBuf },
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn suggest(key: &str) -> Option<String> {
    let limit = (key.len() / 3).max(2);
    KEYS.iter()
        .map(|k| (strsim::levenshtein(key, k), *k))
        .filter(|(d, _)| *d <= limit)
        .min_by_key(|(d, _)| *d)
        .map(|(_, k)| k.to_string())
}

fn check_keys(map: &Map<String, Value>) -> Result<(), ConfigError> {
    for key in map.keys() {
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey {
                key: key.clone(),
                suggestion: suggest(key),
            });
        }
    }
    Ok(())
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.n_initial == 0 || self.n_regular == 0 {
            return bad("n_initial and n_regular must be at least 1".into());
        }
        if self.stage_hours == 0 {
            return bad("stage_hours must be at least 1".into());
        }
        if self.session_size == 0 {
            return bad("session_size must be at least 1".into());
        }
        for (name, v) in [("t_k", self.t_k), ("t_p", self.t_p)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.x_min > 0.0 && self.x_min <= 1.0) {
            return bad(format!("x_min must be in (0, 1], got {}", self.x_min));
        }
        if self.knowledge_k == 0 || self.topic_batch == 0 || self.max_inflight == 0 || self.max_attempts == 0 {
            return bad("knowledge_k, topic_batch, max_inflight and max_attempts must be at least 1".into());
        }
        Ok(())
    }

    /// Existence check for every configured path.
    pub fn check_paths(&self) -> Result<(), ConfigError> {
        let paths = [
            ("fixtures", &self.fixtures),
            ("knowledge", &self.knowledge),
            ("persona_seeds", &self.persona_seeds),
            ("persona_store", &self.persona_store),
        ];
        for (key, path) in paths {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(ConfigError::MissingPath {
                        key: key.into(),
                        path: p.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn agent_params(&self) -> crate::agent::AgentParams {
        crate::agent::AgentParams {
            session_size: self.session_size,
            t_k: self.t_k,
            t_p: self.t_p,
            knowledge_k: self.knowledge_k,
            topic_batch: self.topic_batch,
        }
    }
}

/// Build a config from a JSON object, applying `overrides` on top. Relative
/// paths are resolved against `base_dir`.
pub fn config_from_value(
    file: Value,
    overrides: &[(String, Value)],
    base_dir: &Path,
) -> Result<SimConfig, ConfigError> {
    let Value::Object(mut map) = file else {
        return Err(ConfigError::Syntax("top level must be an object".into()));
    };
    check_keys(&map)?;
    for (key, value) in overrides {
        map.insert(key.clone(), value.clone());
    }
    check_keys(&map)?;
    for key in PATH_KEYS {
        if let Some(Value::String(p)) = map.get(*key) {
            let path = Path::new(p);
            if path.is_relative() {
                map.insert(
                    (*key).into(),
                    Value::String(base_dir.join(path).to_string_lossy().into_owned()),
                );
            }
        }
    }
    let mut config = SimConfig::default();
    // Deserialize key by key so type errors name the offending key.
    let mut merged = serde_json::to_value(&config).expect("config serializes");
    for (key, value) in map {
        merged[&key] = value.clone();
        config = serde_json::from_value(merged.clone()).map_err(|e| ConfigError::Type {
            key: key.clone(),
            message: e.to_string(),
        })?;
    }
    config.validate()?;
    config.check_paths()?;
    Ok(config)
}

/// Load a config file. An empty file yields every default.
pub fn load_config(path: impl AsRef<Path>, overrides: &[(String, Value)]) -> Result<SimConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value = if text.trim().is_empty() {
        Value::Object(Map::new())
    } else {
        serde_json::from_str(&text).map_err(|e| ConfigError::Syntax(e.to_string()))?
    };
    let base = path.parent().unwrap_or(Path::new("."));
    config_from_value(value, overrides, base)
}
