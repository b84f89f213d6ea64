use serde_json::json;

use super::{prompts, Agent, AgentCtx, AgentError};
use crate::events::{Event, EventKind, EventLog};
use crate::llm::{ChatBackend, ChatRequest, LlmError, PromptContext, PromptTag};
use crate::persona::{personalized_knowledge, retrieve_persona, PersonaProfile, RetrievedPersonaView};
use crate::platform::{Platform, PostId, MAX_POST_CHARS};
use crate::retrieval::{pairwise_similarity, KnowledgeEntry};
use crate::text::truncate_at_word;

use super::parse::parse_topics;

/// Attempts for topic generation and for deduplication.
pub const GENERATION_ATTEMPTS: u32 = 3;

pub fn generate_topics(
    profile: &PersonaProfile,
    count: usize,
    llm: &dyn ChatBackend,
    agent: &str,
    turn: u64,
    batch: u32,
) -> Result<Vec<String>, AgentError> {
    let count = count.max(1);
    let prompt = prompts::topics(count, &serde_json::to_string(profile).expect("profile serializes"));
    let mut last = String::new();
    for attempt in 0..GENERATION_ATTEMPTS {
        let request = ChatRequest::new(
            PromptTag::Topics,
            prompt.clone(),
            ChatRequest::key(agent, turn, PromptTag::Topics, format!("{batch}.{attempt}")),
        )
        .with_context(PromptContext::Topics {
            hobbies: profile.hobbies.clone(),
            count,
        });
        last = llm.complete_text(&request)?;
        let topics = parse_topics(&last, count);
        if !topics.is_empty() {
            return Ok(topics);
        }
        tracing::warn!(agent, attempt, "no parseable topics");
    }
    Err(AgentError::NoTopics { raw: last })
}

fn chars(s: &str) -> usize {
    s.chars().count()
}

/// Render the post prompt for `topic`, ask for a draft and enforce the
/// length limit: one regeneration, then truncation at a word boundary.
pub fn compose_post(
    topic: &str,
    view: &RetrievedPersonaView,
    knowledge: &[KnowledgeEntry],
    llm: &dyn ChatBackend,
    seed_key: &str,
) -> Result<String, AgentError> {
    let blocks: Vec<String> = knowledge
        .iter()
        .map(|e| format!("Title: {}\nText: {}", e.title, e.text))
        .collect();
    let prompt = prompts::post(topic, &view.to_json().to_string(), &blocks);
    let context = PromptContext::Post {
        topic: topic.to_string(),
        preferences_hit: view.preferences_hit.clone(),
        knowledge: knowledge.iter().map(|e| e.text.clone()).collect(),
    };
    let ask = |key: String| {
        llm.complete_text(&ChatRequest::new(PromptTag::Post, prompt.clone(), key).with_context(context.clone()))
    };
    let mut body = ask(seed_key.to_string())?;
    if chars(&body) > MAX_POST_CHARS {
        tracing::debug!(seed_key, len = chars(&body), "post too long, regenerating");
        body = ask(format!("{seed_key}.long"))?;
        if chars(&body) > MAX_POST_CHARS {
            body = truncate_at_word(&body, MAX_POST_CHARS);
        }
    }
    if body.trim().is_empty() {
        return Err(AgentError::Llm(LlmError::BadResponse("empty post completion".into())));
    }
    Ok(body)
}

/// Highest similarity between `draft` and any earlier post; 0 with none.
pub fn max_similarity(draft: &str, own_posts: &[String]) -> f64 {
    own_posts
        .iter()
        .map(|p| pairwise_similarity(draft, p))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DedupOutcome {
    pub body: String,
    /// Max similarity of each attempt against earlier posts.
    pub similarities: Vec<f64>,
    pub chosen: usize,
    pub best_of_retries: bool,
}

/// Draft until one attempt is at most `t_p` similar to every earlier post.
/// When every attempt is too similar, the least similar one is kept and
/// flagged.
pub fn dedup_drafts(
    own_posts: &[String],
    t_p: f64,
    mut draft: impl FnMut(u32) -> Result<String, AgentError>,
) -> Result<DedupOutcome, AgentError> {
    let mut bodies = Vec::new();
    let mut sims = Vec::new();
    for attempt in 0..GENERATION_ATTEMPTS {
        let body = draft(attempt)?;
        let sim = max_similarity(&body, own_posts);
        bodies.push(body);
        sims.push(sim);
        if sim <= t_p {
            return Ok(DedupOutcome {
                body: bodies.pop().expect("just pushed"),
                chosen: sims.len() - 1,
                similarities: sims,
                best_of_retries: false,
            });
        }
    }
    let chosen = argmin(&sims);
    Ok(DedupOutcome {
        body: bodies.swap_remove(chosen),
        chosen,
        similarities: sims,
        best_of_retries: true,
    })
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// A deduplicated post ready to publish.
#[derive(Debug, Clone, PartialEq)]
pub struct DraftedPost {
    pub topic: String,
    pub knowledge_ids: Vec<usize>,
    pub outcome: DedupOutcome,
}

/// Full posting pipeline short of publication: topic, persona view,
/// personalized knowledge, composition and deduplication. The body is
/// appended to the agent's own posts.
pub fn draft_post(agent: &mut Agent, ctx: &AgentCtx<'_>, turn: u64) -> Result<DraftedPost, AgentError> {
    let topic = agent.next_topic(ctx, turn)?;
    let view = retrieve_persona(&agent.index, &agent.profile, &topic);
    let knowledge = personalized_knowledge(
        &topic,
        ctx.retriever,
        &agent.profile,
        ctx.params.knowledge_k,
        ctx.params.t_k,
    );
    let seq = agent.memory.own_posts.len();
    let handle = agent.handle.clone();
    let outcome = dedup_drafts(&agent.memory.own_posts, ctx.params.t_p, |attempt| {
        let key = ChatRequest::key(&handle, turn, PromptTag::Post, format!("{seq}.{attempt}"));
        compose_post(&topic, &view, &knowledge, ctx.llm, &key)
    })?;
    agent.memory.own_posts.push(outcome.body.clone());
    Ok(DraftedPost {
        topic,
        knowledge_ids: knowledge.iter().map(|e| e.id).collect(),
        outcome,
    })
}

pub fn publish_draft(
    agent: &Agent,
    platform: &mut Platform,
    draft: &DraftedPost,
    turn: u64,
    log: &mut EventLog,
) -> Result<PostId, AgentError> {
    let id = platform.publish_post(agent.account, &draft.outcome.body, turn)?;
    log.push(Event::new(
        turn,
        &agent.handle,
        EventKind::Post,
        Some(id.0),
        json!({
            "body": draft.outcome.body,
            "topic": draft.topic,
            "knowledge": draft.knowledge_ids,
            "similarities": draft.outcome.similarities,
            "regenerations": draft.outcome.similarities.len() - 1,
            "best_of_retries": draft.outcome.best_of_retries,
        }),
    ));
    Ok(id)
}
