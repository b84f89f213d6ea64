use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatBackend, ChatRequest, LlmError, PromptTag};

/// One fixture line: `{"tag": ..., "key": ..., "completion": ...}`. The key
/// is either the hex SHA-256 of the prompt or the request's seed key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureLine {
    pub tag: PromptTag,
    pub key: String,
    pub completion: String,
}

pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Replays completions from a fixture table. Lookup tries the prompt hash
/// first, then the seed key.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    table: BTreeMap<(PromptTag, String), String>,
}

impl ScriptedBackend {
    pub fn new(lines: impl IntoIterator<Item = FixtureLine>) -> Self {
        ScriptedBackend {
            table: lines.into_iter().map(|l| ((l.tag, l.key), l.completion)).collect(),
        }
    }

    pub fn parse_jsonl(content: &str) -> Result<Self, LlmError> {
        let lines = content
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str::<FixtureLine>(l)
                    .map_err(|e| LlmError::Config(format!("fixture line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(lines))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let content =
            std::fs::read_to_string(path).map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        Self::parse_jsonl(&content)
    }

    pub fn insert(&mut self, tag: PromptTag, key: impl Into<String>, completion: impl Into<String>) {
        self.table.insert((tag, key.into()), completion.into());
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let by_hash = (request.tag, prompt_hash(&request.prompt));
        if let Some(c) = self.table.get(&by_hash) {
            return Ok(c.clone());
        }
        self.table
            .get(&(request.tag, request.seed_key.clone()))
            .cloned()
            .ok_or_else(|| LlmError::FixtureMiss {
                tag: request.tag,
                key: request.seed_key.clone(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_by_seed_key_and_hash() {
        let mut b = ScriptedBackend::default();
        b.insert(PromptTag::Like, "user_000/3/like/7", "like");
        let req = ChatRequest::new(PromptTag::Like, "any prompt", "user_000/3/like/7");
        assert_eq!(b.complete(&req).unwrap(), "like");

        b.insert(PromptTag::Like, prompt_hash("any prompt"), "no operation");
        assert_eq!(b.complete(&req).unwrap(), "no operation");
    }

    #[test]
    fn miss_names_tag_and_key() {
        let b = ScriptedBackend::default();
        let req = ChatRequest::new(PromptTag::Reblog, "p", "k1");
        assert_eq!(
            b.complete(&req),
            Err(LlmError::FixtureMiss {
                tag: PromptTag::Reblog,
                key: "k1".into()
            })
        );
    }

    #[test]
    fn jsonl_fixture_parsing() {
        let b = ScriptedBackend::parse_jsonl("{\"tag\":\"comment\",\"key\":\"a\",\"completion\":\"no comment\"}\n\n")
            .unwrap();
        assert_eq!(b.len(), 1);
        assert!(ScriptedBackend::parse_jsonl("{\"tag\":\"judge\",\"key\":\"a\",\"completion\":\"x\"}").is_err());
    }
}
