use std::collections::BTreeSet;

use super::{EvalError, NliLabel};
use crate::llm::SidecarClient;
use crate::retrieval::{pairwise_similarity, tokenize};

/// Similarity and entailment judgements used by the metrics.
pub trait Scorer: Send + Sync {
    /// Similarity of `candidate` to `reference`, in `[0, 1]`.
    fn similarity(&self, candidate: &str, reference: &str) -> Result<f64, EvalError>;
    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliLabel, EvalError>;
    fn name(&self) -> String;
}

/// Similarity at or above this counts as entailment for the mock scorer.
pub const MOCK_ENTAILMENT_SIMILARITY: f64 = 0.3;

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "do", "does", "for", "from", "has", "have", "he", "her",
    "his", "i", "in", "is", "it", "its", "me", "my", "not", "of", "on", "or", "she", "so", "that", "the", "their",
    "they", "this", "to", "was", "we", "with", "you", "your",
];

/// Offline scorer: lexical TF-IDF similarity and a rule-based NLI.
///
/// NLI is entailment when similarity reaches 0.3; otherwise contradiction
/// when the hypothesis has "not" followed later by a content token of the
/// premise; otherwise neutral.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockScorer;

impl MockScorer {
    fn negates(premise: &str, hypothesis: &str) -> bool {
        let content: BTreeSet<String> = tokenize(premise)
            .into_iter()
            .filter(|t| !STOPWORDS.contains(&t.as_str()))
            .collect();
        let tokens = tokenize(hypothesis);
        match tokens.iter().position(|t| t == "not") {
            Some(i) => tokens[i + 1..].iter().any(|t| content.contains(t)),
            None => false,
        }
    }
}

impl Scorer for MockScorer {
    fn similarity(&self, candidate: &str, reference: &str) -> Result<f64, EvalError> {
        Ok(pairwise_similarity(candidate, reference))
    }

    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliLabel, EvalError> {
        if pairwise_similarity(premise, hypothesis) >= MOCK_ENTAILMENT_SIMILARITY {
            Ok(NliLabel::Entailment)
        } else if Self::negates(premise, hypothesis) {
            Ok(NliLabel::Contradiction)
        } else {
            Ok(NliLabel::Neutral)
        }
    }

    fn name(&self) -> String {
        "mock".into()
    }
}

/// Scores through the model-scorer HTTP service.
#[derive(Debug, Clone)]
pub struct SidecarScorer {
    client: SidecarClient,
}

impl SidecarScorer {
    pub fn new(client: SidecarClient) -> Self {
        SidecarScorer { client }
    }

    pub fn connect(url: &str) -> Result<Self, EvalError> {
        let client = SidecarClient::new(url).map_err(|e| EvalError::Scorer(e.to_string()))?;
        client
            .health()
            .map_err(|e| EvalError::Scorer(format!("sidecar at {url} is not healthy: {e}")))?;
        Ok(Self::new(client))
    }
}

impl Scorer for SidecarScorer {
    fn similarity(&self, candidate: &str, reference: &str) -> Result<f64, EvalError> {
        self.client
            .similarity(candidate, reference)
            .map_err(|e| EvalError::Scorer(e.to_string()))
    }

    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliLabel, EvalError> {
        self.client
            .nli(premise, hypothesis)
            .map_err(|e| EvalError::Scorer(e.to_string()))?
            .parse()
    }

    fn name(&self) -> String {
        format!("sidecar({})", self.client.base_url())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_rules() {
        let s = MockScorer;
        let t = "I love walking my dogs in the park";
        assert!((s.similarity(t, t).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(s.nli(t, t).unwrap(), NliLabel::Entailment);
        assert_eq!(s.similarity("apples pears", "rockets engines").unwrap(), 0.0);
        assert_eq!(s.nli("apples pears", "rockets engines").unwrap(), NliLabel::Neutral);
        assert_eq!(
            s.nli("loves dogs", "does not love dogs").unwrap(),
            NliLabel::Contradiction
        );
        assert_eq!(s.nli("loves dogs", "does not like cats").unwrap(), NliLabel::Neutral);
    }
}
