use serde::{Deserialize, Serialize};

use super::{parse_plan, ActivityLevel, HourWindow, PlanSpec};
use crate::llm::{ChatBackend, ChatRequest, PromptContext, PromptTag};
use crate::persona::PersonaProfile;

pub const PLAN_ATTEMPTS: u32 = 3;

const PLAN_TEMPLATE: &str = "Assume that you are the person described in [Persona information], you usually browse social media and perform social behaviors such as liking and posting, and you have an activity level of: {activity} (full activity level is 1). In order to be consistent with your persona's behavior, You need to plan and schedule your behavior and generate a coarse-grained planning table containing the frequency of the behavior and the duration of the behavior, all using a 24-hour time frame and providing only one time period for browsing and posting. Please strictly follow the following examples to generate a plan. Here is an example, please follow the format in the example for the output:

Browsing time period: xx:xx-xx:xx

Probability of liking: x%

Probability of forwarding: x%

Probability of commenting: x%

Posting time period: day x-xx:xx-xx:xx Frequency of posting: x times per week

Your persona information is as follows:

Persona information: {persona}";

pub fn plan_prompt(profile: &PersonaProfile, activity: ActivityLevel) -> String {
    PLAN_TEMPLATE
        .replace("{activity}", &format!("{:.2}", activity.value()))
        .replace(
            "{persona}",
            &serde_json::to_string(profile).expect("profile serializes"),
        )
}

/// Deterministic plan used when the backend never yields a parseable one.
pub fn fallback_plan(activity: ActivityLevel) -> PlanSpec {
    let a = activity.value();
    PlanSpec {
        browse_window: HourWindow { start: 19, end: 21 },
        p_like: 0.2 * a,
        p_reblog: 0.1 * a,
        p_comment: 0.1 * a,
        post_day: 1,
        post_window: HourWindow { start: 20, end: 21 },
        posts_per_week: 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedPlan {
    pub plan: PlanSpec,
    pub fallback: bool,
}

pub fn generate_plan(
    profile: &PersonaProfile,
    activity: ActivityLevel,
    agent: &str,
    llm: &dyn ChatBackend,
) -> GeneratedPlan {
    let prompt = plan_prompt(profile, activity);
    for attempt in 0..PLAN_ATTEMPTS {
        let request = ChatRequest::new(
            PromptTag::Plan,
            prompt.clone(),
            ChatRequest::key(agent, 0, PromptTag::Plan, attempt),
        )
        .with_context(PromptContext::Plan {
            persona_name: profile.name.clone(),
            activity: activity.value(),
        });
        match llm.complete_text(&request) {
            Ok(text) => match parse_plan(&text) {
                Ok(plan) => return GeneratedPlan { plan, fallback: false },
                Err(e) => tracing::warn!(agent, attempt, error = %e, "unparseable plan"),
            },
            Err(e) => tracing::warn!(agent, attempt, error = %e, "plan request failed"),
        }
    }
    tracing::warn!(agent, "using fallback plan");
    GeneratedPlan {
        plan: fallback_plan(activity),
        fallback: true,
    }
}
