use serde::{Deserialize, Serialize};

use super::PromptTag;

/// Structured facts behind a prompt. Remote backends only see the rendered
/// text; the heuristic backend decides from these instead of parsing prose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PromptContext {
    Enrich {
        seed_lines: Vec<String>,
    },
    /// Like, reblog and comment decisions.
    Decision {
        view_text: String,
        preferences_hit: Option<String>,
        post_body: String,
    },
    Topics {
        hobbies: String,
        count: usize,
    },
    Post {
        topic: String,
        preferences_hit: Option<String>,
        knowledge: Vec<String>,
    },
    Plan {
        persona_name: String,
        activity: f64,
    },
    Summary {
        body: String,
    },
    Reflect {
        tallies: Vec<ReflectTally>,
    },
}

/// Positive actions an agent took on one poster's content within a
/// reflection window, in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectTally {
    pub poster: String,
    pub positive_actions: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub tag: PromptTag,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Deterministic key: agent, turn, tag and a per-call discriminator.
    pub seed_key: String,
    #[serde(skip)]
    pub context: Option<PromptContext>,
}

impl ChatRequest {
    pub fn new(tag: PromptTag, prompt: impl Into<String>, seed_key: impl Into<String>) -> Self {
        let prompt = prompt.into();
        debug_assert!(!prompt.is_empty(), "prompt must not be empty");
        ChatRequest {
            tag,
            prompt,
            temperature: tag.temperature(),
            max_tokens: tag.max_tokens(),
            seed_key: seed_key.into(),
            context: None,
        }
    }

    pub fn with_context(mut self, context: PromptContext) -> Self {
        self.context = Some(context);
        self
    }

    /// Seed key layout shared by every caller: `agent/turn/tag/discriminator`.
    pub fn key(agent: &str, turn: u64, tag: PromptTag, discriminator: impl std::fmt::Display) -> String {
        format!("{agent}/{turn}/{tag}/{discriminator}")
    }
}
