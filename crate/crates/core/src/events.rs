//! Append-only simulation trace, serialized as JSON Lines.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Browse,
    Like,
    Reblog,
    Comment,
    Post,
    Follow,
    Reflect,
    Anomaly,
}

/// One trace line. `target` is a post id for browse/like/reblog/comment/post
/// events and an account id for follow events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub turn: u64,
    pub agent: String,
    pub kind: EventKind,
    pub target: Option<u64>,
    pub payload: Value,
    pub suppressed: bool,
}

impl Event {
    pub fn new(turn: u64, agent: &str, kind: EventKind, target: Option<u64>, payload: Value) -> Self {
        Event {
            turn,
            agent: agent.to_string(),
            kind,
            target,
            payload,
            suppressed: false,
        }
    }

    pub fn suppressed(mut self, suppressed: bool) -> Self {
        self.suppressed = suppressed;
        self
    }

    pub fn payload_str(&self, key: &str) -> Option<&str> {
        self.payload.get(key).and_then(Value::as_str)
    }

    pub fn payload_u64(&self, key: &str) -> Option<u64> {
        self.payload.get(key).and_then(Value::as_u64)
    }

    pub fn payload_bool(&self, key: &str) -> Option<bool> {
        self.payload.get(key).and_then(Value::as_bool)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: Event) {
        debug_assert!(
            self.events.last().is_none_or(|e| e.turn <= event.turn),
            "event turns must be nondecreasing"
        );
        self.events.push(event);
    }

    pub fn extend(&mut self, events: impl IntoIterator<Item = Event>) {
        for e in events {
            self.push(e);
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Event> {
        self.events.iter()
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<EventLog, String> {
        let mut log = EventLog::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| format!("line {}: {e}", i + 1))?;
            if line.trim().is_empty() {
                continue;
            }
            let ev: Event = serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?;
            log.events.push(ev);
        }
        Ok(log)
    }
}

impl<'a> IntoIterator for &'a EventLog {
    type Item = &'a Event;
    type IntoIter = std::slice::Iter<'a, Event>;
    fn into_iter(self) -> Self::IntoIter {
        self.events.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn jsonl_roundtrip() {
        let mut log = EventLog::new();
        log.push(Event::new(
            1,
            "user_000",
            EventKind::Browse,
            Some(3),
            json!({"author": "init_001"}),
        ));
        log.push(Event::new(1, "user_000", EventKind::Like, Some(3), json!({})).suppressed(true));
        let mut buf = Vec::new();
        log.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("\"kind\":\"browse\""));
        let back = EventLog::read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, log);
    }
}
