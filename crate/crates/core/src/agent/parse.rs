//! Parsers for decision completions. Every parser is total: unexpected
//! text maps to the conservative outcome and is reported as an anomaly.

/// A parsed decision plus a note when the completion did not follow the
/// expected grammar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed<T> {
    pub value: T,
    pub anomaly: Option<String>,
}

impl<T> Parsed<T> {
    fn ok(value: T) -> Self {
        Parsed { value, anomaly: None }
    }

    fn odd(value: T, note: impl Into<String>) -> Self {
        Parsed {
            value,
            anomaly: Some(note.into()),
        }
    }
}

fn binary(text: &str, positive: &str) -> Parsed<bool> {
    let t = text.trim().to_lowercase();
    if t == positive {
        Parsed::ok(true)
    } else if t == "no operation" {
        Parsed::ok(false)
    } else {
        Parsed::odd(
            false,
            format!("expected {positive:?} or \"no operation\", got {:?}", text.trim()),
        )
    }
}

pub fn parse_like(text: &str) -> Parsed<bool> {
    binary(text, "like")
}

pub fn parse_reblog(text: &str) -> Parsed<bool> {
    binary(text, "forward")
}

const COMMENT_PREFIX: &str = "comment content:";

pub fn parse_comment(text: &str) -> Parsed<Option<String>> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("no comment") {
        return Parsed::ok(None);
    }
    let has_prefix = t
        .get(..COMMENT_PREFIX.len())
        .is_some_and(|p| p.eq_ignore_ascii_case(COMMENT_PREFIX));
    if has_prefix {
        let body = t[COMMENT_PREFIX.len()..].trim();
        return if body.is_empty() {
            Parsed::odd(None, "empty comment after prefix")
        } else {
            Parsed::ok(Some(body.to_string()))
        };
    }
    if t.is_empty() {
        Parsed::odd(None, "empty comment completion")
    } else {
        Parsed::odd(Some(t.to_string()), "comment without prefix accepted as body")
    }
}

pub const MAX_TOPIC_WORDS: usize = 15;

/// Numbered lines `N. topic` (or `N) topic`), `#` removed, each cut to 15
/// words. At most `count` topics are returned.
pub fn parse_topics(text: &str, count: usize) -> Vec<String> {
    text.lines()
        .filter_map(|line| {
            let line = line.trim();
            let digits = line.chars().take_while(char::is_ascii_digit).count();
            if digits == 0 {
                return None;
            }
            let rest = line[digits..].strip_prefix(['.', ')'])?;
            let cleaned: String = rest.chars().filter(|&c| c != '#').collect();
            let words: Vec<&str> = cleaned
                .trim()
                .trim_matches(|c| c == '"' || c == '*')
                .split_whitespace()
                .take(MAX_TOPIC_WORDS)
                .collect();
            (!words.is_empty()).then(|| words.join(" "))
        })
        .take(count)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FollowChoice {
    Follow(String),
    NoFollow,
}

/// `"do not follow"` or the first token naming a registered handle.
pub fn parse_follow(text: &str, is_registered: impl Fn(&str) -> bool) -> Parsed<FollowChoice> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("do not follow") {
        return Parsed::ok(FollowChoice::NoFollow);
    }
    let found = t
        .split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|tok| !tok.is_empty())
        .find(|tok| is_registered(tok));
    match found {
        Some(handle) if handle == t => Parsed::ok(FollowChoice::Follow(handle.to_string())),
        Some(handle) => Parsed::odd(
            FollowChoice::Follow(handle.to_string()),
            format!("follow target extracted from {t:?}"),
        ),
        None => Parsed::odd(FollowChoice::NoFollow, format!("no registered account in {t:?}")),
    }
}
