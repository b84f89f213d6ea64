use serde_json::json;

use super::parse::{parse_follow, FollowChoice};
use super::{prompts, Agent, AgentCtx, SummaryCache, MAX_SUMMARY_WORDS};
use crate::events::{Event, EventKind, EventLog};
use crate::llm::{ChatBackend, ChatRequest, PromptContext, PromptTag, ReflectTally};
use crate::persona::retrieve_persona;
use crate::platform::{AccountId, Platform, PostId};
use crate::text::{first_words, word_count};

/// Cached summary of at most 50 words. Backend failures fall back to the
/// first 50 words of the body.
pub fn summarize_post(post: PostId, body: &str, llm: &dyn ChatBackend, cache: &mut SummaryCache) -> String {
    if let Some(s) = cache.get(post) {
        return s.to_string();
    }
    let request = ChatRequest::new(
        PromptTag::Summary,
        prompts::summary(body),
        ChatRequest::key("summary", 0, PromptTag::Summary, post.0),
    )
    .with_context(PromptContext::Summary { body: body.to_string() });
    let summary = match llm.complete_text(&request) {
        Ok(s) if !s.is_empty() => {
            if word_count(&s) > MAX_SUMMARY_WORDS {
                first_words(&s, MAX_SUMMARY_WORDS)
            } else {
                s
            }
        }
        Ok(_) => first_words(body, MAX_SUMMARY_WORDS),
        Err(e) => {
            tracing::warn!(%post, error = %e, "summary failed, using leading words");
            first_words(body, MAX_SUMMARY_WORDS)
        }
    };
    cache.insert(post, summary.clone());
    summary
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReflectionDecision {
    Follow(AccountId),
    NoFollow,
}

/// Positive actions per poster over `records`, in order of first appearance.
pub fn tally(records: &[super::ActionRecord]) -> Vec<ReflectTally> {
    let mut out: Vec<ReflectTally> = Vec::new();
    for r in records {
        match out.iter_mut().find(|t| t.poster == r.poster) {
            Some(t) => t.positive_actions += r.positive_actions(),
            None => out.push(ReflectTally {
                poster: r.poster.clone(),
                positive_actions: r.positive_actions(),
            }),
        }
    }
    out
}

/// Review records since the previous reflection and follow at most one
/// account.
pub fn reflect_follow(
    agent: &mut Agent,
    platform: &mut Platform,
    ctx: &AgentCtx<'_>,
    cache: &mut SummaryCache,
    turn: u64,
    log: &mut EventLog,
) -> ReflectionDecision {
    let records = agent.memory.records_after(agent.last_reflection).to_vec();
    agent.last_reflection = turn;
    let mut anomaly = None;
    let mut raw = None;
    let decision = if records.is_empty() {
        ReflectionDecision::NoFollow
    } else {
        let history = records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let summary = summarize_post(r.post_id, &r.post_body, ctx.llm, cache);
                prompts::reflect_entry(i + 1, &r.poster, &summary, &r.describe())
            })
            .collect::<Vec<_>>()
            .join("\n");
        let view = retrieve_persona(&agent.index, &agent.profile, &history);
        let request = ChatRequest::new(
            PromptTag::Reflect,
            prompts::reflect(&view.render_text(), &history),
            ChatRequest::key(&agent.handle, turn, PromptTag::Reflect, 0),
        )
        .with_context(PromptContext::Reflect {
            tallies: tally(&records),
        });
        match ctx.llm.complete_text(&request) {
            Err(e) => {
                anomaly = Some(format!("backend: {e}"));
                ReflectionDecision::NoFollow
            }
            Ok(text) => {
                let parsed = parse_follow(&text, |h| platform.account_by_handle(h).is_some());
                anomaly = parsed.anomaly;
                raw = Some(text);
                match parsed.value {
                    FollowChoice::NoFollow => ReflectionDecision::NoFollow,
                    FollowChoice::Follow(h) if h == agent.handle => {
                        anomaly = Some("reflection chose to follow itself".into());
                        ReflectionDecision::NoFollow
                    }
                    FollowChoice::Follow(h) => {
                        let id = platform.account_by_handle(&h).expect("parser checked registration").id;
                        ReflectionDecision::Follow(id)
                    }
                }
            }
        }
    };
    if let Some(detail) = anomaly {
        log.push(Event::new(
            turn,
            &agent.handle,
            EventKind::Anomaly,
            None,
            json!({"op": "reflect", "detail": detail, "raw": raw}),
        ));
    }
    let followed = match decision {
        ReflectionDecision::Follow(id) => Some(id),
        ReflectionDecision::NoFollow => None,
    };
    log.push(Event::new(
        turn,
        &agent.handle,
        EventKind::Reflect,
        followed.map(|id| u64::from(id.0)),
        json!({
            "records": records.len(),
            "decision": if followed.is_some() { "follow" } else { "no_follow" },
        }),
    ));
    if let Some(id) = followed {
        match platform.follow(agent.account, id) {
            Ok(new_edge) => {
                let handle = platform.account(id).map(|a| a.handle.clone()).unwrap_or_default();
                log.push(Event::new(
                    turn,
                    &agent.handle,
                    EventKind::Follow,
                    Some(u64::from(id.0)),
                    json!({"handle": handle, "new": new_edge}),
                ));
            }
            Err(e) => log.push(Event::new(
                turn,
                &agent.handle,
                EventKind::Anomaly,
                None,
                json!({"op": "follow", "detail": e.to_string()}),
            )),
        }
    }
    decision
}
