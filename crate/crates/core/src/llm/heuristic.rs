use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{ChatBackend, ChatRequest, LlmError, PromptContext, PromptTag, ReflectTally};
use crate::planning::{render_plan, ActivityLevel, HourWindow, PlanSpec};
use crate::retrieval::pairwise_similarity;
use crate::text::{first_words, truncate_at_word};

/// Similarity cut-offs between the hobbies in the persona view and a post.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicThresholds {
    pub like: f64,
    pub reblog: f64,
    pub comment: f64,
}

impl Default for HeuristicThresholds {
    fn default() -> Self {
        HeuristicThresholds {
            like: 0.10,
            reblog: 0.15,
            comment: 0.20,
        }
    }
}

/// Rule-based stand-in for a language model. Output is a pure function of
/// the request, so whole runs are reproducible offline.
#[derive(Debug, Clone, Default)]
pub struct HeuristicBackend {
    pub thresholds: HeuristicThresholds,
}

impl HeuristicBackend {
    pub fn new(thresholds: HeuristicThresholds) -> Self {
        HeuristicBackend { thresholds }
    }
}

/// The `Hobbies:` line of a rendered persona view. Names and template
/// words elsewhere in the view would make every post look relevant.
fn hobbies_line(view_text: &str) -> &str {
    view_text
        .lines()
        .find_map(|l| l.trim().strip_prefix("Hobbies:"))
        .map_or(view_text, |h| h.trim().trim_end_matches(','))
}

fn stable_hash(s: &str) -> u64 {
    let d = Sha256::digest(s.as_bytes());
    u64::from_be_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

fn pick<'a>(options: &[&'a str], h: u64) -> &'a str {
    options[(h % options.len() as u64) as usize]
}

fn first_sentence(text: &str) -> &str {
    let bytes = text.as_bytes();
    for (i, c) in text.char_indices() {
        if matches!(c, '.' | '!' | '?') && bytes.get(i + 1).is_none_or(|b| b.is_ascii_whitespace()) {
            return &text[..=i];
        }
    }
    text
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Turn a first-person seed line into a third-person sentence.
fn third_person(line: &str) -> String {
    let words: Vec<String> = line
        .trim()
        .trim_end_matches(['.', '!', '?'])
        .split_whitespace()
        .map(|w| {
            match w.to_lowercase().as_str() {
                "i" => "they",
                "i'm" => "they're",
                "i've" => "they've",
                "i'll" => "they'll",
                "i'd" => "they'd",
                "am" => "are",
                "my" => "their",
                "me" => "them",
                "mine" => "theirs",
                "myself" => "themselves",
                _ => w,
            }
            .to_string()
        })
        .collect();
    format!("{}.", capitalize(&words.join(" ")))
}

/// Object phrase of "i like/love/enjoy X" lines.
fn interest(line: &str) -> Option<String> {
    let lower = line.to_lowercase();
    let words: Vec<&str> = lower.trim_end_matches(['.', '!', '?']).split_whitespace().collect();
    let pos = words
        .iter()
        .position(|w| matches!(*w, "like" | "love" | "enjoy" | "likes" | "loves" | "enjoys"))?;
    let rest = words[pos + 1..].join(" ");
    (!rest.is_empty()).then_some(rest)
}

const NAMES: &[&str] = &[
    "Maya", "Liam", "Sofia", "Noah", "Amara", "Kenji", "Elena", "Omar", "Priya", "Lucas", "Hana", "Mateo", "Zara",
    "Felix", "Ines", "Tomas", "Leila", "Arjun", "Clara", "Diego",
];
const NATIONALITIES: &[&str] = &[
    "Canadian",
    "Brazilian",
    "Irish",
    "Kenyan",
    "Japanese",
    "Spanish",
    "Indian",
    "Australian",
    "Mexican",
    "German",
    "Egyptian",
    "Swedish",
];
const TRAITS: &[&str] = &[
    "Curious",
    "Outgoing",
    "Thoughtful",
    "Easygoing",
    "Determined",
    "Warm",
    "Witty",
    "Patient",
    "Energetic",
    "Practical",
];
const GENDERS: &[&str] = &["Female", "Male", "Non-binary"];

fn enrich(seed_lines: &[String]) -> String {
    let text = seed_lines.join("\n");
    let h = stable_hash(&text);
    let name = pick(NAMES, h);
    let t1 = pick(TRAITS, h >> 8);
    let t2 = pick(TRAITS, (h >> 16) + 1);
    let personality = if t1 == t2 {
        t1.to_string()
    } else {
        format!("{t1}, {t2}")
    };
    let mut interests: Vec<String> = seed_lines.iter().filter_map(|l| interest(l)).collect();
    if interests.is_empty() {
        interests.push(first_words(&seed_lines[0].to_lowercase(), 4));
    }
    let hobbies = interests.iter().map(|i| capitalize(i)).collect::<Vec<_>>().join(", ");
    let listed = interests.join(" and ");
    let history = seed_lines
        .iter()
        .map(|l| third_person(l))
        .chain(std::iter::once(format!("{name} has spent years exploring {listed}.")))
        .collect::<Vec<_>>()
        .join(" ");
    let preferences = format!(
        "{name} enjoys sharing posts about {listed}. They like reading stories and tips from people with similar interests. They are open to discussions about {}.",
        interests[0]
    );
    let knowledge = format!(
        "{name} has practical knowledge about {listed}. They keep up with news and techniques related to {}.",
        interests[interests.len() - 1]
    );
    json!({
        "name": name,
        "age": 18 + (h >> 24) % 50,
        "gender": pick(GENDERS, h >> 32),
        "nationality": pick(NATIONALITIES, h >> 40),
        "personality": personality,
        "hobbies": hobbies,
        "detailed historical behaviour information": history,
        "preferences for social media content": preferences,
        "knowledge": knowledge,
    })
    .to_string()
}

const ANGLES: &[&str] = &[
    "{h}",
    "what {h} taught me this week",
    "getting started with {h}",
    "my favorite moments with {h}",
    "common mistakes people make with {h}",
    "why {h} matters to me",
    "small wins in {h}",
];

fn topics(hobbies: &str, count: usize) -> String {
    let phrases: Vec<String> = hobbies
        .split(',')
        .map(|p| p.trim().to_lowercase())
        .filter(|p| !p.is_empty())
        .collect();
    let phrases = if phrases.is_empty() {
        vec!["daily life".to_string()]
    } else {
        phrases
    };
    (0..count.max(1))
        .map(|i| {
            let hobby = &phrases[i % phrases.len()];
            let angle = ANGLES[(i / phrases.len()) % ANGLES.len()];
            format!("{}. {}", i + 1, capitalize(&angle.replace("{h}", hobby)))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

const OPENERS: &[&str] = &[
    "Thinking about {t} today.",
    "Some thoughts on {t}.",
    "Quick note on {t}.",
    "Been reflecting on {t} lately.",
    "Sharing a bit about {t}.",
];

fn post(seed_key: &str, topic: &str, preferences_hit: Option<&str>, knowledge: &[String]) -> String {
    let topic = topic.trim().trim_end_matches(['.', '!', '?']);
    let opener = pick(OPENERS, stable_hash(seed_key)).replace("{t}", topic);
    let mut parts = vec![opener];
    if let Some(p) = preferences_hit {
        parts.push(p.trim().to_string());
    }
    if let Some(k) = knowledge.first() {
        parts.push(first_sentence(k.trim()).to_string());
    }
    truncate_at_word(&parts.join(" "), crate::platform::MAX_POST_CHARS)
}

fn plan(persona_name: &str, activity: f64) -> String {
    let h = stable_hash(persona_name);
    let activity = ActivityLevel::new(activity).map_or(0.1, |a| a.value());
    let posts = ((7.0 * activity).round() as u32).max(1);
    let browse_start = 7 + (h % 15) as u8;
    let browse_len = 1 + ((h >> 8) % 3) as u8;
    let post_start = 8 + ((h >> 16) % 11) as u8;
    let post_len = posts.clamp(1, 4) as u8;
    let spec = PlanSpec {
        browse_window: HourWindow {
            start: browse_start,
            end: (browse_start + browse_len).min(24),
        },
        p_like: 0.2 + 0.6 * activity,
        p_reblog: 0.1 + 0.3 * activity,
        p_comment: 0.1 + 0.3 * activity,
        post_day: 1 + ((h >> 24) % 7) as u8,
        post_window: HourWindow {
            start: post_start,
            end: post_start + post_len,
        },
        posts_per_week: posts,
    };
    render_plan(&spec)
}

fn reflect(tallies: &[ReflectTally]) -> String {
    let mut best: Option<&ReflectTally> = None;
    for t in tallies {
        if best.is_none_or(|b| t.positive_actions > b.positive_actions) {
            best = Some(t);
        }
    }
    match best {
        Some(t) if t.positive_actions >= 2 => t.poster.clone(),
        _ => "do not follow".to_string(),
    }
}

impl ChatBackend for HeuristicBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let th = self.thresholds;
        let out = match (request.tag, &request.context) {
            (PromptTag::Enrich, Some(PromptContext::Enrich { seed_lines })) if !seed_lines.is_empty() => {
                enrich(seed_lines)
            }
            (PromptTag::Enrich, _) => enrich(std::slice::from_ref(&request.prompt)),
            (tag @ (PromptTag::Like | PromptTag::Reblog | PromptTag::Comment), ctx) => {
                let (sim, pref) = match ctx {
                    Some(PromptContext::Decision {
                        view_text,
                        preferences_hit,
                        post_body,
                    }) => (
                        pairwise_similarity(hobbies_line(view_text), post_body),
                        preferences_hit.as_deref(),
                    ),
                    _ => (0.0, None),
                };
                match tag {
                    PromptTag::Like if sim >= th.like => "like".into(),
                    PromptTag::Reblog if sim >= th.reblog => "forward".into(),
                    PromptTag::Comment if sim >= th.comment => match pref {
                        Some(p) => format!("Comment content: This resonates with me. {}", p.trim()),
                        None => "Comment content: This resonates with me.".into(),
                    },
                    PromptTag::Comment => "no comment".into(),
                    _ => "no operation".into(),
                }
            }
            (PromptTag::Topics, Some(PromptContext::Topics { hobbies, count })) => topics(hobbies, *count),
            (PromptTag::Topics, _) => topics("", 1),
            (
                PromptTag::Post,
                Some(PromptContext::Post {
                    topic,
                    preferences_hit,
                    knowledge,
                }),
            ) => post(&request.seed_key, topic, preferences_hit.as_deref(), knowledge),
            (PromptTag::Post, _) => post(&request.seed_key, "today", None, &[]),
            (PromptTag::Plan, Some(PromptContext::Plan { persona_name, activity })) => plan(persona_name, *activity),
            (PromptTag::Plan, _) => plan(&request.seed_key, 0.1),
            (PromptTag::Summary, Some(PromptContext::Summary { body })) => first_words(body, 50),
            (PromptTag::Summary, _) => first_words(&request.prompt, 50),
            (PromptTag::Reflect, Some(PromptContext::Reflect { tallies })) => reflect(tallies),
            (PromptTag::Reflect, _) => "do not follow".into(),
        };
        Ok(out)
    }
}
