use std::io::Write;

use parking_lot::Mutex;

use super::{ChatBackend, ChatRequest, FixtureLine, LlmError};

/// Passes requests through and keeps every completion as a seed-keyed
/// fixture line, so a run can later be replayed by the scripted backend.
pub struct RecordingBackend<B> {
    inner: B,
    lines: Mutex<Vec<FixtureLine>>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        RecordingBackend {
            inner,
            lines: Mutex::new(Vec::new()),
        }
    }

    /// Recorded lines sorted by tag and key, first completion per key.
    /// Sorting makes the output independent of request scheduling.
    pub fn lines(&self) -> Vec<FixtureLine> {
        let mut lines = self.lines.lock().clone();
        lines.sort_by(|a, b| (a.tag, &a.key).cmp(&(b.tag, &b.key)));
        lines.dedup_by(|b, a| a.tag == b.tag && a.key == b.key);
        lines
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for line in &self.lines() {
            serde_json::to_writer(&mut out, line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let out = self.inner.complete(request)?;
        self.lines.lock().push(FixtureLine {
            tag: request.tag,
            key: request.seed_key.clone(),
            completion: out.clone(),
        });
        Ok(out)
    }

    fn is_remote(&self) -> bool {
        self.inner.is_remote()
    }
}
