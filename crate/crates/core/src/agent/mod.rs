//! Agent actions: browsing with like/reblog/comment decisions, posting with
//! deduplication, post summaries and follow reflection.

mod memory;
pub mod parse;
mod posting;
pub mod prompts;
mod reflect;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use serde_json::json;

pub use memory::{ActionRecord, ShortTermMemory, SummaryCache, MAX_SUMMARY_WORDS};
pub use parse::Parsed;
pub use posting::{
    compose_post, dedup_drafts, draft_post, generate_topics, max_similarity, publish_draft, DedupOutcome, DraftedPost,
    GENERATION_ATTEMPTS,
};
pub use reflect::{reflect_follow, summarize_post, tally, ReflectionDecision};

use crate::events::{Event, EventKind, EventLog};
use crate::llm::{ChatBackend, ChatRequest, LlmError, PromptContext, PromptTag};
use crate::persona::{retrieve_persona, segment_attributes, PersonaIndex, PersonaProfile, RetrievedPersonaView};
use crate::planning::{quotas, PlanSpec};
use crate::platform::{Account, AccountId, Engagement, Platform, PlatformError};
use crate::retrieval::Retriever;

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error("no parseable topics; last completion: {raw:?}")]
    NoTopics { raw: String },
}

/// Tunables shared by all agents in a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub session_size: usize,
    pub t_k: f64,
    pub t_p: f64,
    pub knowledge_k: usize,
    /// Topics requested per topic-generation call.
    pub topic_batch: usize,
}

impl Default for AgentParams {
    fn default() -> Self {
        AgentParams {
            session_size: crate::planning::DEFAULT_SESSION_SIZE,
            t_k: crate::persona::DEFAULT_T_K,
            t_p: 0.80,
            knowledge_k: crate::persona::DEFAULT_KNOWLEDGE_K,
            topic_batch: 7,
        }
    }
}

/// Read-only services an agent acts through.
#[derive(Clone, Copy)]
pub struct AgentCtx<'a> {
    pub llm: &'a dyn ChatBackend,
    pub retriever: &'a dyn Retriever,
    pub params: AgentParams,
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub handle: String,
    pub account: AccountId,
    pub profile: PersonaProfile,
    pub index: PersonaIndex,
    /// Only regular agents carry a plan.
    pub plan: Option<PlanSpec>,
    pub memory: ShortTermMemory,
    pub last_reflection: u64,
    topics: VecDeque<String>,
    topic_batches: u32,
}

impl Agent {
    pub fn new(handle: impl Into<String>, account: AccountId, profile: PersonaProfile) -> Self {
        let index = segment_attributes(&profile);
        Agent {
            handle: handle.into(),
            account,
            profile,
            index,
            plan: None,
            memory: ShortTermMemory::default(),
            last_reflection: 0,
            topics: VecDeque::new(),
            topic_batches: 0,
        }
    }

    /// Next queued topic, requesting a fresh batch when the queue is empty.
    pub fn next_topic(&mut self, ctx: &AgentCtx<'_>, turn: u64) -> Result<String, AgentError> {
        if self.topics.is_empty() {
            let batch = generate_topics(
                &self.profile,
                ctx.params.topic_batch,
                ctx.llm,
                &self.handle,
                turn,
                self.topic_batches,
            )?;
            self.topic_batches += 1;
            self.topics.extend(batch);
        }
        Ok(self.topics.pop_front().expect("batch is nonempty"))
    }

    pub fn view(&self, query: &str) -> RetrievedPersonaView {
        retrieve_persona(&self.index, &self.profile, query)
    }
}

fn decision_request(tag: PromptTag, prompt: String, key: &str, view: &RetrievedPersonaView, body: &str) -> ChatRequest {
    ChatRequest::new(tag, prompt, key).with_context(PromptContext::Decision {
        view_text: view.render_text(),
        preferences_hit: view.preferences_hit.clone(),
        post_body: body.to_string(),
    })
}

fn backend_failure<T>(value: T, e: LlmError) -> Parsed<T> {
    Parsed {
        value,
        anomaly: Some(format!("backend: {e}")),
    }
}

pub fn decide_like(view: &RetrievedPersonaView, post_body: &str, llm: &dyn ChatBackend, key: &str) -> Parsed<bool> {
    let req = decision_request(
        PromptTag::Like,
        prompts::like(post_body, &view.render_text()),
        key,
        view,
        post_body,
    );
    match llm.complete_text(&req) {
        Ok(t) => parse::parse_like(&t),
        Err(e) => backend_failure(false, e),
    }
}

pub fn decide_reblog(view: &RetrievedPersonaView, post_body: &str, llm: &dyn ChatBackend, key: &str) -> Parsed<bool> {
    let req = decision_request(
        PromptTag::Reblog,
        prompts::reblog(post_body, &view.render_text()),
        key,
        view,
        post_body,
    );
    match llm.complete_text(&req) {
        Ok(t) => parse::parse_reblog(&t),
        Err(e) => backend_failure(false, e),
    }
}

pub fn decide_comment(
    view: &RetrievedPersonaView,
    post_body: &str,
    llm: &dyn ChatBackend,
    key: &str,
) -> Parsed<Option<String>> {
    let req = decision_request(
        PromptTag::Comment,
        prompts::comment(post_body, &view.render_text()),
        key,
        view,
        post_body,
    );
    match llm.complete_text(&req) {
        Ok(t) => parse::parse_comment(&t),
        Err(e) => backend_failure(None, e),
    }
}

fn anomaly(turn: u64, agent: &str, op: &str, target: Option<u64>, detail: String) -> Event {
    Event::new(
        turn,
        agent,
        EventKind::Anomaly,
        target,
        json!({"op": op, "detail": detail}),
    )
}

/// One browsing session: fetch up to K recommended posts and decide on each.
/// Positive decisions beyond the plan's quotas are logged as suppressed and
/// not applied.
pub fn browse_session<F>(
    agent: &mut Agent,
    platform: &mut Platform,
    ctx: &AgentCtx<'_>,
    visible: &F,
    turn: u64,
    log: &mut EventLog,
) -> Result<Vec<ActionRecord>, AgentError>
where
    F: Fn(&Account) -> bool + Sync,
{
    let Some(plan) = agent.plan.as_ref() else {
        return Ok(Vec::new());
    };
    let quota = quotas(plan, ctx.params.session_size);
    let picked = platform.recommend(agent.account, visible, quota.session_size, turn)?;
    let (mut likes, mut reblogs, mut comments) = (0, 0, 0);
    let mut records = Vec::with_capacity(picked.len());
    for (rank, post_id) in picked.into_iter().enumerate() {
        let post = platform.post(post_id)?.clone();
        let author = platform.account(post.author)?;
        let author_handle = author.handle.clone();
        log.push(Event::new(
            turn,
            &agent.handle,
            EventKind::Browse,
            Some(post_id.0),
            json!({
                "author": author_handle,
                "author_kind": author.kind,
                "body": post.body,
                "rank": rank,
            }),
        ));
        let view = agent.view(&post.body);
        let key = |tag| ChatRequest::key(&agent.handle, turn, tag, post_id.0);
        let target = Some(post_id.0);

        let like = decide_like(&view, &post.body, ctx.llm, &key(PromptTag::Like));
        let reblog = decide_reblog(&view, &post.body, ctx.llm, &key(PromptTag::Reblog));
        let comment = decide_comment(&view, &post.body, ctx.llm, &key(PromptTag::Comment));
        for (op, note) in [
            ("like", &like.anomaly),
            ("reblog", &reblog.anomaly),
            ("comment", &comment.anomaly),
        ] {
            if let Some(n) = note {
                log.push(anomaly(turn, &agent.handle, op, target, n.clone()));
            }
        }

        let mut record = ActionRecord {
            turn,
            post_id,
            post_body: post.body.clone(),
            poster: author_handle.clone(),
            liked: false,
            reblogged: false,
            comment: None,
        };
        if like.value {
            let allowed = likes < quota.max_likes;
            if allowed {
                platform.engage(agent.account, post_id, Engagement::Like, turn)?;
                likes += 1;
                record.liked = true;
            }
            log.push(
                Event::new(
                    turn,
                    &agent.handle,
                    EventKind::Like,
                    target,
                    json!({"author": author_handle}),
                )
                .suppressed(!allowed),
            );
        }
        if reblog.value {
            let allowed = reblogs < quota.max_reblogs;
            let mut created = None;
            if allowed {
                created = platform
                    .engage(agent.account, post_id, Engagement::Reblog, turn)?
                    .map(|c| match c {
                        crate::platform::Created::Post(p) => p.0,
                        crate::platform::Created::Comment(c) => c.0,
                    });
                reblogs += 1;
                record.reblogged = true;
            }
            log.push(
                Event::new(
                    turn,
                    &agent.handle,
                    EventKind::Reblog,
                    target,
                    json!({"author": author_handle, "reblog_post": created}),
                )
                .suppressed(!allowed),
            );
        }
        if let Some(body) = comment.value {
            let allowed = comments < quota.max_comments;
            if allowed {
                platform.engage(agent.account, post_id, Engagement::Comment(body.clone()), turn)?;
                comments += 1;
                record.comment = Some(body.clone());
            }
            log.push(
                Event::new(
                    turn,
                    &agent.handle,
                    EventKind::Comment,
                    target,
                    json!({"author": author_handle, "body": body}),
                )
                .suppressed(!allowed),
            );
        }
        agent.memory.push_record(record.clone());
        records.push(record);
    }
    Ok(records)
}
