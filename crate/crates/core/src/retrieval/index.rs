use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::{smoothed_idf, term_counts, KnowledgeEntry, Retriever, TermVector};
use crate::exec::Execution;

/// A knowledge entry paired with its relevance to a query.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEntry {
    pub entry: KnowledgeEntry,
    pub score: f64,
}

/// Corpus-wide TF-IDF index. Immutable after construction.
#[derive(Debug, Clone)]
pub struct TfIdfIndex {
    idf: BTreeMap<String, f64>,
    docs: Vec<TermVector>,
    norms: Vec<f64>,
}

impl TfIdfIndex {
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let counts: Vec<BTreeMap<String, u32>> = texts.into_iter().map(term_counts).collect();
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in &counts {
            for term in doc.keys() {
                *df.entry(term.clone()).or_insert(0) += 1;
            }
        }
        let n = counts.len();
        let idf: BTreeMap<String, f64> = df.into_iter().map(|(t, d)| (t, smoothed_idf(n, d))).collect();
        let docs: Vec<TermVector> = counts
            .iter()
            .map(|doc| TermVector::from_weights(doc.iter().map(|(t, &c)| (t.clone(), f64::from(c) * idf[t.as_str()]))))
            .collect();
        let norms = docs.iter().map(TermVector::norm).collect();
        TfIdfIndex { idf, docs, norms }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Weight a query against the corpus vocabulary. Terms the corpus never
    /// saw carry no weight.
    pub fn vectorize(&self, text: &str) -> TermVector {
        TermVector::from_weights(
            term_counts(text)
                .into_iter()
                .filter_map(|(t, c)| self.idf.get(&t).map(|w| (t, f64::from(c) * w))),
        )
    }

    /// Cosine of the query against every document, in document order.
    pub fn scores_with(&self, exec: Execution, query: &str) -> Vec<f64> {
        let q = self.vectorize(query);
        let qn = q.norm();
        exec.map_range(self.docs.len(), |i| {
            let denom = qn * self.norms[i];
            if denom == 0.0 {
                0.0
            } else {
                (q.dot(&self.docs[i]) / denom).clamp(0.0, 1.0)
            }
        })
    }

    /// Indices and scores of the best `k` documents with nonzero score,
    /// ties by ascending index.
    pub fn rank_with(&self, exec: Execution, query: &str, k: usize) -> Vec<(usize, f64)> {
        let mut hits: Vec<(usize, f64)> = self
            .scores_with(exec, query)
            .into_iter()
            .enumerate()
            .filter(|&(_, s)| s > 0.0)
            .collect();
        exec.sort_by(&mut hits, |a, b| {
            b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0))
        });
        hits.truncate(k);
        hits
    }
}

/// The default lexical retriever over a knowledge corpus.
#[derive(Debug, Clone)]
pub struct TfIdfRetriever {
    entries: Vec<KnowledgeEntry>,
    index: TfIdfIndex,
    exec: Execution,
}

impl TfIdfRetriever {
    pub fn new(entries: Vec<KnowledgeEntry>) -> Self {
        Self::with_execution(entries, Execution::default())
    }

    pub fn with_execution(entries: Vec<KnowledgeEntry>, exec: Execution) -> Self {
        let texts: Vec<String> = entries.iter().map(KnowledgeEntry::index_text).collect();
        let index = TfIdfIndex::build(texts.iter().map(String::as_str));
        TfIdfRetriever { entries, index, exec }
    }

    pub fn entries(&self) -> &[KnowledgeEntry] {
        &self.entries
    }
}

impl Retriever for TfIdfRetriever {
    fn query(&self, text: &str, k: usize) -> Vec<ScoredEntry> {
        let mut ranked = self.index.rank_with(self.exec, text, usize::MAX);
        // entry ids break ties, which may differ from corpus positions
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then(self.entries[a.0].id.cmp(&self.entries[b.0].id))
        });
        ranked
            .into_iter()
            .take(k)
            .map(|(i, score)| ScoredEntry {
                entry: self.entries[i].clone(),
                score,
            })
            .collect()
    }
}

/// Rank `corpus` against `query` and return at most `k` nonzero hits.
pub fn topk(query: &str, corpus: &[KnowledgeEntry], k: usize) -> Vec<ScoredEntry> {
    if corpus.is_empty() || k == 0 {
        return Vec::new();
    }
    TfIdfRetriever::new(corpus.to_vec()).query(query, k)
}
