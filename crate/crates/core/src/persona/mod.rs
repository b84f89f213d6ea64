//! Persona schema, enrichment, per-action persona retrieval and knowledge
//! gating.

mod enrich;
mod profile;
mod view;

pub use enrich::{enrich_persona, enrichment_prompt, ENRICH_ATTEMPTS};
pub use profile::{extract_json_object, parse_profile, parse_seeds, PersonaProfile, PersonaSeed};
pub use view::{retrieve_persona, segment_attributes, segment_sentences, PersonaIndex, RetrievedPersonaView};

use crate::llm::LlmError;
use crate::retrieval::{pairwise_similarity, KnowledgeEntry, Retriever};

/// Knowledge adoption threshold used when none is configured.
pub const DEFAULT_T_K: f64 = 0.25;
/// Candidates fetched from the corpus before gating.
pub const DEFAULT_KNOWLEDGE_K: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum PersonaError {
    #[error("persona seed has no nonempty line")]
    EmptySeed,
    #[error("invalid persona profile: {0}")]
    InvalidProfile(String),
    #[error("enrichment failed after {attempts} attempts; last completion: {last_raw:?}")]
    Enrichment { attempts: u32, last_raw: String },
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error("{0}")]
    Io(String),
}

/// Whether `candidate` falls inside the persona's knowledge boundary.
pub fn gate_knowledge(candidate: &KnowledgeEntry, profile: &PersonaProfile, t_k: f64) -> bool {
    knowledge_similarity(candidate, profile) > t_k
}

pub fn knowledge_similarity(candidate: &KnowledgeEntry, profile: &PersonaProfile) -> f64 {
    pairwise_similarity(&candidate.index_text(), &profile.knowledge)
}

/// Top-`k` corpus entries for `topic` that pass the gate, in rank order.
pub fn personalized_knowledge(
    topic: &str,
    retriever: &dyn Retriever,
    profile: &PersonaProfile,
    k: usize,
    t_k: f64,
) -> Vec<KnowledgeEntry> {
    retriever
        .query(topic, k.max(1))
        .into_iter()
        .map(|s| s.entry)
        .filter(|e| gate_knowledge(e, profile, t_k))
        .collect()
}
