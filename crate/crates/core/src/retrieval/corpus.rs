use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::RetrievalError;

/// One line of a knowledge file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeRecord {
    pub title: String,
    pub text: String,
}

/// A titled passage with a corpus-stable id (its position in the source file).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeEntry {
    pub id: usize,
    pub title: String,
    pub text: String,
}

impl KnowledgeEntry {
    /// Title and passage joined, which is what gets indexed and gated.
    pub fn index_text(&self) -> String {
        format!("{} {}", self.title, self.text)
    }
}

/// Parse JSON Lines knowledge content. Blank lines are skipped; ids follow
/// record order.
pub fn parse_knowledge(content: &str) -> Result<Vec<KnowledgeEntry>, RetrievalError> {
    let mut out = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: KnowledgeRecord = serde_json::from_str(line).map_err(|e| RetrievalError::Malformed {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if rec.text.trim().is_empty() {
            return Err(RetrievalError::Malformed {
                line: lineno + 1,
                message: "empty text".into(),
            });
        }
        out.push(KnowledgeEntry {
            id: out.len(),
            title: rec.title,
            text: rec.text,
        });
    }
    Ok(out)
}

pub fn ingest_knowledge(path: impl AsRef<Path>) -> Result<Vec<KnowledgeEntry>, RetrievalError> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|source| RetrievalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_knowledge(&content)
}

pub fn write_knowledge(records: &[KnowledgeRecord], mut out: impl Write) -> std::io::Result<()> {
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Flatten HotpotQA examples into knowledge records.
///
/// Accepts either a JSON array of examples or one example per line. Every
/// `[title, [sentence, ...]]` pair in an example's `context` becomes one
/// record with its sentences concatenated. Repeated (title, text) pairs,
/// which are common across questions, are kept once.
pub fn convert_hotpotqa(content: &str) -> Result<Vec<KnowledgeRecord>, RetrievalError> {
    let trimmed = content.trim_start();
    let examples: Vec<Value> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed).map_err(|e| RetrievalError::HotpotQa(e.to_string()))?
    } else {
        trimmed
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| RetrievalError::HotpotQa(format!("line {}: {e}", i + 1))))
            .collect::<Result<_, _>>()?
    };

    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, ex) in examples.iter().enumerate() {
        let context = ex
            .get("context")
            .and_then(Value::as_array)
            .ok_or_else(|| RetrievalError::HotpotQa(format!("example {i}: missing context")))?;
        for para in context {
            let (title, sentences) = match para.as_array().map(Vec::as_slice) {
                Some([Value::String(t), Value::Array(s)]) => (t, s),
                _ => {
                    return Err(RetrievalError::HotpotQa(format!(
                        "example {i}: context entries must be [title, [sentences]]"
                    )))
                }
            };
            let text: String = sentences.iter().filter_map(Value::as_str).collect();
            let text = text.trim().to_string();
            if text.is_empty() {
                continue;
            }
            if seen.insert((title.clone(), text.clone())) {
                out.push(KnowledgeRecord {
                    title: title.clone(),
                    text,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_records_get_sequential_ids() {
        let src = r#"{"title":"A","text":"alpha"}
{"title":"B","text":"beta"}

{"title":"C","text":"gamma"}
"#;
        let c = parse_knowledge(src).unwrap();
        assert_eq!(c.iter().map(|e| e.id).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(c[2].title, "C");
    }

    #[test]
    fn empty_input_is_empty_corpus() {
        assert!(parse_knowledge("").unwrap().is_empty());
    }

    #[test]
    fn malformed_record_names_line() {
        let src = "{\"title\":\"A\",\"text\":\"alpha\"}\n{\"title\":\"B\"}\n";
        match parse_knowledge(src) {
            Err(RetrievalError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hotpotqa_context_is_flattened() {
        let src = r#"[{"_id":"x","question":"q","answer":"a","context":[
            ["Paul Owens (dog trainer)", ["Paul Owens is an author.", " He trains dogs."]],
            ["Clicker", ["A clicker is a marker."]]]},
          {"_id":"y","context":[["Clicker", ["A clicker is a marker."]]]}]"#;
        let recs = convert_hotpotqa(src).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].text, "Paul Owens is an author. He trains dogs.");
    }

    #[test]
    fn hotpotqa_jsonl_input_is_accepted() {
        let src = "{\"context\":[[\"T\",[\"s1.\",\" s2.\"]]]}\n{\"context\":[[\"U\",[\"u.\"]]]}\n";
        assert_eq!(convert_hotpotqa(src).unwrap().len(), 2);
        assert!(convert_hotpotqa("{\"nope\":1}").is_err());
    }
}
