use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use super::PersonaError;

/// A short first-person persona, one statement per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaSeed {
    pub lines: Vec<String>,
}

impl PersonaSeed {
    pub fn new(lines: impl IntoIterator<Item = impl Into<String>>) -> Result<Self, PersonaError> {
        let lines: Vec<String> = lines
            .into_iter()
            .map(Into::into)
            .map(|l: String| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        if lines.is_empty() {
            return Err(PersonaError::EmptySeed);
        }
        Ok(PersonaSeed { lines })
    }

    pub fn text(&self) -> String {
        self.lines.join("\n")
    }
}

/// Parse a seed file: personas are blocks of lines separated by blank lines.
/// Lines starting with `#` are comments.
pub fn parse_seeds(content: &str) -> Vec<PersonaSeed> {
    let mut seeds = Vec::new();
    let mut block: Vec<&str> = Vec::new();
    for line in content.lines().chain(std::iter::once("")) {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if let Ok(seed) = PersonaSeed::new(block.drain(..)) {
                seeds.push(seed);
            }
        } else {
            block.push(line);
        }
    }
    seeds
}

/// Enriched persona. Serialized with the nine keys of the enrichment prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaProfile {
    pub name: String,
    #[serde(deserialize_with = "positive_age")]
    pub age: u32,
    pub gender: String,
    pub nationality: String,
    pub personality: String,
    pub hobbies: String,
    #[serde(rename = "detailed historical behaviour information")]
    pub history: String,
    #[serde(rename = "preferences for social media content")]
    pub preferences: String,
    pub knowledge: String,
}

fn positive_age<'de, D: Deserializer<'de>>(d: D) -> Result<u32, D::Error> {
    use serde::de::Error;
    let v = Value::deserialize(d)?;
    let age = match &v {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse::<u64>().ok(),
        _ => None,
    };
    match age {
        Some(a) if a > 0 && a <= u64::from(u32::MAX) => Ok(a as u32),
        _ => Err(D::Error::custom(format!("age must be a positive integer, got {v}"))),
    }
}

impl PersonaProfile {
    /// Every text field must be present and nonempty.
    pub fn validate(&self) -> Result<(), PersonaError> {
        let fields = [
            ("name", &self.name),
            ("gender", &self.gender),
            ("nationality", &self.nationality),
            ("personality", &self.personality),
            ("hobbies", &self.hobbies),
            ("detailed historical behaviour information", &self.history),
            ("preferences for social media content", &self.preferences),
            ("knowledge", &self.knowledge),
        ];
        for (key, value) in fields {
            if value.trim().is_empty() {
                return Err(PersonaError::InvalidProfile(format!("{key} is empty")));
            }
        }
        if self.age == 0 {
            return Err(PersonaError::InvalidProfile("age must be positive".into()));
        }
        Ok(())
    }

    /// Persona reference text used when scoring content consistency:
    /// personality, hobbies and content preferences, in that order.
    pub fn scoring_text(&self) -> String {
        format!("{} {} {}", self.personality, self.hobbies, self.preferences)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PersonaError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PersonaError::Io(format!("{}: {e}", path.display())))?;
        let p: PersonaProfile = serde_json::from_str(&text)
            .map_err(|e| PersonaError::InvalidProfile(format!("{}: {e}", path.display())))?;
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PersonaError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_pretty() + "\n")
            .map_err(|e| PersonaError::Io(format!("{}: {e}", path.display())))
    }
}

/// Strip an optional markdown code fence and surrounding chatter, leaving
/// the outermost JSON object.
pub fn extract_json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    (end > start).then(|| &text[start..=end])
}

/// Parse and validate an enrichment completion.
pub fn parse_profile(text: &str) -> Result<PersonaProfile, PersonaError> {
    let body =
        extract_json_object(text).ok_or_else(|| PersonaError::InvalidProfile("no JSON object in completion".into()))?;
    let profile: PersonaProfile =
        serde_json::from_str(body).map_err(|e| PersonaError::InvalidProfile(e.to_string()))?;
    profile.validate()?;
    Ok(profile)
}
