use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::PersonaProfile;
use crate::retrieval::pairwise_similarity;

/// Split text into sentences at `.`, `!` or `?` followed by whitespace or
/// the end of input. Items are trimmed; empty items are dropped.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let boundary = chars.peek().is_none_or(|(_, next)| next.is_whitespace());
            if boundary {
                let end = i + c.len_utf8();
                push_trimmed(&mut out, &text[start..end]);
                start = end;
            }
        }
    }
    push_trimmed(&mut out, &text[start..]);
    out
}

fn push_trimmed(out: &mut Vec<String>, piece: &str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece.to_string());
    }
}

/// Sentence items of the three advanced attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaIndex {
    pub history: Vec<String>,
    pub preferences: Vec<String>,
    pub knowledge: Vec<String>,
}

pub fn segment_attributes(profile: &PersonaProfile) -> PersonaIndex {
    PersonaIndex {
        history: segment_sentences(&profile.history),
        preferences: segment_sentences(&profile.preferences),
        knowledge: segment_sentences(&profile.knowledge),
    }
}

/// Basic fields verbatim plus the most query-relevant sentence of each
/// advanced attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievedPersonaView {
    pub name: String,
    pub age: u32,
    pub gender: String,
    pub nationality: String,
    pub personality: String,
    pub hobbies: String,
    pub history_hit: Option<String>,
    pub preferences_hit: Option<String>,
    pub knowledge_hit: Option<String>,
}

fn best_sentence(query: &str, items: &[String]) -> Option<String> {
    let mut best: Option<(usize, f64)> = None;
    for (i, item) in items.iter().enumerate() {
        let s = pairwise_similarity(query, item);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| items[i].clone())
}

pub fn retrieve_persona(index: &PersonaIndex, profile: &PersonaProfile, query: &str) -> RetrievedPersonaView {
    RetrievedPersonaView {
        name: profile.name.clone(),
        age: profile.age,
        gender: profile.gender.clone(),
        nationality: profile.nationality.clone(),
        personality: profile.personality.clone(),
        hobbies: profile.hobbies.clone(),
        history_hit: best_sentence(query, &index.history),
        preferences_hit: best_sentence(query, &index.preferences),
        knowledge_hit: best_sentence(query, &index.knowledge),
    }
}

impl RetrievedPersonaView {
    /// Plain-text rendering used in decision prompts.
    pub fn render_text(&self) -> String {
        let hit = |h: &Option<String>| h.clone().unwrap_or_default();
        format!(
            "Name: {}, age: {}, gender: {}, nationality: {},\n\
             Personality: {},\n\
             Hobbies: {},\n\
             Detailed historical behaviour information: {}\n\
             Preferences for social media content: {}\n\
             Knowledge: {}",
            self.name,
            self.age,
            self.gender,
            self.nationality,
            self.personality,
            self.hobbies,
            hit(&self.history_hit),
            hit(&self.preferences_hit),
            hit(&self.knowledge_hit),
        )
    }

    /// JSON rendering with the profile keys, used in post prompts.
    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "age": self.age,
            "gender": self.gender,
            "nationality": self.nationality,
            "personality": self.personality,
            "hobbies": self.hobbies,
            "detailed historical behaviour information": self.history_hit.clone().unwrap_or_default(),
            "preferences for social media content": self.preferences_hit.clone().unwrap_or_default(),
            "knowledge": self.knowledge_hit.clone().unwrap_or_default(),
        })
    }
}
