use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::events::{EventKind, EventLog};
use crate::platform::PostId;

/// What an agent did with one browsed post. Flags reflect actions actually
/// applied to the platform, not quota-suppressed decisions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub turn: u64,
    pub post_id: PostId,
    pub post_body: String,
    /// Handle of the post author.
    pub poster: String,
    pub liked: bool,
    pub reblogged: bool,
    pub comment: Option<String>,
}

impl ActionRecord {
    pub fn positive_actions(&self) -> u32 {
        u32::from(self.liked) + u32::from(self.reblogged) + u32::from(self.comment.is_some())
    }

    /// Action description for reflection prompts.
    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if self.liked {
            parts.push("like".to_string());
        }
        if self.reblogged {
            parts.push("reblog".to_string());
        }
        if let Some(c) = &self.comment {
            parts.push(format!("comment \"{c}\""));
        }
        if parts.is_empty() {
            "no operation".to_string()
        } else {
            parts.join(", ")
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortTermMemory {
    pub records: Vec<ActionRecord>,
    pub own_posts: Vec<String>,
}

impl ShortTermMemory {
    pub fn push_record(&mut self, record: ActionRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.turn <= record.turn));
        self.records.push(record);
    }

    pub fn records_after(&self, turn: u64) -> &[ActionRecord] {
        let start = self.records.partition_point(|r| r.turn <= turn);
        &self.records[start..]
    }

    /// Rebuild an agent's memory from the event trace alone.
    pub fn replay(log: &EventLog, agent: &str) -> ShortTermMemory {
        let mut memory = ShortTermMemory::default();
        let mut open: BTreeMap<u64, usize> = BTreeMap::new();
        for e in log.iter().filter(|e| e.agent == agent) {
            match e.kind {
                EventKind::Browse => {
                    let Some(post) = e.target else { continue };
                    open.insert(post, memory.records.len());
                    memory.records.push(ActionRecord {
                        turn: e.turn,
                        post_id: PostId(post),
                        post_body: e.payload_str("body").unwrap_or_default().to_string(),
                        poster: e.payload_str("author").unwrap_or_default().to_string(),
                        liked: false,
                        reblogged: false,
                        comment: None,
                    });
                }
                EventKind::Like | EventKind::Reblog | EventKind::Comment if !e.suppressed => {
                    let Some(&i) = e.target.and_then(|t| open.get(&t)) else {
                        continue;
                    };
                    let record = &mut memory.records[i];
                    match e.kind {
                        EventKind::Like => record.liked = true,
                        EventKind::Reblog => record.reblogged = true,
                        _ => record.comment = e.payload_str("body").map(str::to_string),
                    }
                }
                EventKind::Post => {
                    if let Some(body) = e.payload_str("body") {
                        memory.own_posts.push(body.to_string());
                    }
                }
                _ => {}
            }
        }
        memory
    }
}

pub const MAX_SUMMARY_WORDS: usize = 50;

/// Post summaries shared by all agents, keyed by post id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryCache {
    entries: BTreeMap<PostId, String>,
}

impl SummaryCache {
    pub fn get(&self, post: PostId) -> Option<&str> {
        self.entries.get(&post).map(String::as_str)
    }

    pub fn insert(&mut self, post: PostId, summary: String) {
        debug_assert!(summary.split_whitespace().count() <= MAX_SUMMARY_WORDS);
        self.entries.insert(post, summary);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PostId, &str)> {
        self.entries.iter().map(|(k, v)| (*k, v.as_str()))
    }
}
