//! Lexical retrieval: tokenization, TF-IDF weighting, cosine similarity and
//! ranked lookup over a knowledge corpus.
//!
//! All weighting uses raw term counts and the smoothed inverse document
//! frequency `ln((1 + N) / (1 + df)) + 1`. Term vectors are kept in ordered
//! maps so that every score is bit-reproducible.

mod corpus;
mod index;

use std::collections::BTreeMap;

pub use corpus::{
    convert_hotpotqa, ingest_knowledge, parse_knowledge, write_knowledge, KnowledgeEntry, KnowledgeRecord,
};
pub use index::{topk, ScoredEntry, TfIdfIndex, TfIdfRetriever};

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed knowledge record at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("malformed HotpotQA input: {0}")]
    HotpotQa(String),
}

/// Lowercase and split on every run of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Raw term counts of a token stream.
pub(crate) fn term_counts(text: &str) -> BTreeMap<String, u32> {
    let mut counts = BTreeMap::new();
    for tok in tokenize(text) {
        *counts.entry(tok).or_insert(0) += 1;
    }
    counts
}

/// Smoothed idf for a term seen in `df` of `n_docs` documents.
pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Sparse nonnegative term weights. Zero weights are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermVector(BTreeMap<String, f64>);

impl TermVector {
    pub fn from_weights(weights: impl IntoIterator<Item = (String, f64)>) -> Self {
        TermVector(weights.into_iter().filter(|(_, w)| *w > 0.0).collect())
    }

    pub fn get(&self, term: &str) -> f64 {
        self.0.get(term).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn norm(&self) -> f64 {
        self.0.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &TermVector) -> f64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.iter().map(|(t, w)| w * large.get(t)).sum()
    }

    /// Cosine similarity clamped to `[0, 1]`; zero when either side is empty.
    pub fn cosine(&self, other: &TermVector) -> f64 {
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            return 0.0;
        }
        (self.dot(other) / denom).clamp(0.0, 1.0)
    }
}

/// TF-IDF cosine of two texts treated as a two-document corpus.
pub fn pairwise_similarity(a: &str, b: &str) -> f64 {
    let ca = term_counts(a);
    let cb = term_counts(b);
    if ca.is_empty() || cb.is_empty() {
        return 0.0;
    }
    let weigh = |own: &BTreeMap<String, u32>, other: &BTreeMap<String, u32>| {
        TermVector::from_weights(own.iter().map(|(t, &c)| {
            let df = 1 + usize::from(other.contains_key(t));
            (t.clone(), f64::from(c) * smoothed_idf(2, df))
        }))
    };
    weigh(&ca, &cb).cosine(&weigh(&cb, &ca))
}

/// Anything that can rank knowledge entries against a free-text query.
///
/// Results are sorted by descending relevance with ties broken by ascending
/// entry id, and must be deterministic for a fixed corpus.
pub trait Retriever: Send + Sync {
    fn query(&self, text: &str, k: usize) -> Vec<ScoredEntry>;
}
