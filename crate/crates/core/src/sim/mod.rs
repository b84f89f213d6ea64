//! Experiment orchestration: world seeding, the two interaction stages and
//! per-turn agent activation.
//!
//! Logical order is strictly sequential within a turn. Work that has no
//! observable effect until it is applied (persona enrichment, seed post
//! drafting, plan generation) runs through [`Execution`] and is applied in
//! canonical agent order, so both execution modes produce the same trace.

mod run;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use run::{build_backend, enrich_seed_file, load_personas, run_experiment, Manifest, RunArtifacts, MANIFEST_FILES};

use crate::agent::{
    browse_session, draft_post, publish_draft, reflect_follow, Agent, AgentCtx, AgentError, SummaryCache,
};
use crate::clock::SimClock;
use crate::config::{ConfigError, SimConfig};
use crate::events::{Event, EventKind, EventLog};
use crate::exec::Execution;
use crate::llm::{ChatBackend, LlmError};
use crate::persona::{PersonaError, PersonaProfile};
use crate::planning::{generate_plan, is_browse_turn, posts_due, sample_activity, PlanSpec, PlanningError};
use crate::platform::{Account, AccountKind, Platform, PlatformError};
use crate::retrieval::{RetrievalError, Retriever};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error(transparent)]
    Persona(#[from] PersonaError),
    #[error(transparent)]
    Knowledge(#[from] RetrievalError),
    #[error(transparent)]
    Planning(#[from] PlanningError),
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error("seeding failed for {handle}: {source}")]
    Seeding {
        handle: String,
        #[source]
        source: AgentError,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StagePhase {
    Seeding,
    Stage1,
    Stage2,
    Done,
}

impl StagePhase {
    /// Phase a turn belongs to: turn 0 seeds, then two stages of
    /// `stage_hours` turns each.
    pub fn of_turn(turn: u64, stage_hours: u64) -> StagePhase {
        if turn == 0 {
            StagePhase::Seeding
        } else if turn <= stage_hours {
            StagePhase::Stage1
        } else if turn <= 2 * stage_hours {
            StagePhase::Stage2
        } else {
            StagePhase::Done
        }
    }

    /// Author kind visible to regular agents during this phase.
    pub fn visible_kind(self) -> Option<AccountKind> {
        match self {
            StagePhase::Stage1 => Some(AccountKind::Initial),
            StagePhase::Stage2 => Some(AccountKind::Regular),
            StagePhase::Seeding | StagePhase::Done => None,
        }
    }
}

pub fn initial_handle(i: usize) -> String {
    format!("init_{i:03}")
}

pub fn regular_handle(i: usize) -> String {
    format!("user_{i:03}")
}

/// Plan of one regular agent as written to the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPlan {
    pub handle: String,
    pub activity: f64,
    pub fallback: bool,
    #[serde(flatten)]
    pub plan: PlanSpec,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub turns: u64,
    pub events: usize,
    pub posts: usize,
    pub seed_posts: usize,
    pub anomalies: usize,
    pub fallback_plans: usize,
}

pub struct Simulation<'a> {
    config: SimConfig,
    llm: &'a dyn ChatBackend,
    retriever: &'a dyn Retriever,
    exec: Execution,
    pub platform: Platform,
    /// Initial agents first, then regular agents, each in id order.
    pub agents: Vec<Agent>,
    pub plans: Vec<AgentPlan>,
    pub log: EventLog,
    pub summaries: SummaryCache,
    pub clock: SimClock,
    pub phase: StagePhase,
    rng: ChaCha8Rng,
}

impl<'a> Simulation<'a> {
    /// Register all accounts. `personas` holds the initial agents' profiles
    /// followed by the regular agents'.
    pub fn new(
        config: SimConfig,
        personas: Vec<PersonaProfile>,
        llm: &'a dyn ChatBackend,
        retriever: &'a dyn Retriever,
    ) -> Result<Self, SimError> {
        config.validate()?;
        let needed = config.n_initial + config.n_regular;
        if personas.len() != needed {
            return Err(ConfigError::Invalid(format!("expected {needed} personas, got {}", personas.len())).into());
        }
        let mut platform = Platform::new();
        let mut agents = Vec::with_capacity(needed);
        for (i, profile) in personas.into_iter().enumerate() {
            let (handle, kind) = if i < config.n_initial {
                (initial_handle(i), AccountKind::Initial)
            } else {
                (regular_handle(i - config.n_initial), AccountKind::Regular)
            };
            let id = platform.create_account(&handle, kind)?;
            agents.push(Agent::new(handle, id, profile));
        }
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Simulation {
            config,
            llm,
            retriever,
            exec: Execution::default(),
            platform,
            agents,
            plans: Vec::new(),
            log: EventLog::new(),
            summaries: SummaryCache::default(),
            clock: SimClock::default(),
            phase: StagePhase::Seeding,
            rng,
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    fn ctx(&self) -> AgentCtx<'a> {
        AgentCtx {
            llm: self.llm,
            retriever: self.retriever,
            params: self.config.agent_params(),
        }
    }

    /// Turn 0: every initial agent drafts its seed posts, then all drafts
    /// are published in agent order.
    pub fn seed_world(&mut self) -> Result<(), SimError> {
        let ctx = self.ctx();
        let per_agent = self.config.posts_per_initial;
        let drafted = self.exec.map(&self.agents[..self.config.n_initial], |agent| {
            let mut agent = agent.clone();
            let drafts = (0..per_agent)
                .map(|_| draft_post(&mut agent, &ctx, 0))
                .collect::<Result<Vec<_>, _>>();
            (agent, drafts)
        });
        for (i, (agent, drafts)) in drafted.into_iter().enumerate() {
            let drafts = drafts.map_err(|source| SimError::Seeding {
                handle: agent.handle.clone(),
                source,
            })?;
            for draft in &drafts {
                publish_draft(&agent, &mut self.platform, draft, 0, &mut self.log).map_err(|source| {
                    SimError::Seeding {
                        handle: agent.handle.clone(),
                        source,
                    }
                })?;
            }
            self.agents[i] = agent;
        }
        Ok(())
    }

    /// Sample an activity level per regular agent (in id order, from the
    /// run seed) and generate each agent's plan.
    pub fn plan_agents(&mut self) -> Result<(), SimError> {
        let mut activities = Vec::with_capacity(self.config.n_regular);
        for _ in 0..self.config.n_regular {
            activities.push(sample_activity(&mut self.rng, self.config.alpha, self.config.x_min)?);
        }
        let regular = &self.agents[self.config.n_initial..];
        let llm = self.llm;
        let generated = self.exec.map_range(regular.len(), |i| {
            generate_plan(&regular[i].profile, activities[i], &regular[i].handle, llm)
        });
        self.plans.clear();
        for (i, (generated, activity)) in generated.into_iter().zip(activities).enumerate() {
            let agent = &mut self.agents[self.config.n_initial + i];
            if generated.fallback {
                self.log.push(Event::new(
                    0,
                    &agent.handle,
                    EventKind::Anomaly,
                    None,
                    json!({"op": "plan", "detail": "no parseable plan, using fallback"}),
                ));
            }
            agent.plan = Some(generated.plan.clone());
            self.plans.push(AgentPlan {
                handle: agent.handle.clone(),
                activity: activity.value(),
                fallback: generated.fallback,
                plan: generated.plan,
            });
        }
        Ok(())
    }

    /// Regular agents in the order they act this turn.
    fn turn_order(&mut self) -> Vec<usize> {
        let mut order: Vec<usize> = (self.config.n_initial..self.agents.len()).collect();
        if self.config.shuffle_agents {
            order.shuffle(&mut self.rng);
        }
        order
    }

    /// Advance the clock one turn and activate every regular agent.
    pub fn step(&mut self) {
        self.clock.tick();
        let turn = self.clock.turn;
        self.phase = StagePhase::of_turn(turn, self.config.stage_hours);
        let Some(kind) = self.phase.visible_kind() else {
            return;
        };
        let visible = move |a: &Account| a.kind == kind;
        let ctx = self.ctx();
        for i in self.turn_order() {
            let agent = &mut self.agents[i];
            if let Err(e) = act(agent, &mut self.platform, &ctx, &visible, self.clock, &mut self.log) {
                tracing::warn!(agent = %agent.handle, turn, error = %e, "agent quarantined for this turn");
                self.log.push(Event::new(
                    turn,
                    &agent.handle,
                    EventKind::Anomaly,
                    None,
                    json!({"op": "turn", "detail": e.to_string()}),
                ));
                continue;
            }
            if self.clock.is_reflection_turn() {
                reflect_follow(
                    agent,
                    &mut self.platform,
                    &ctx,
                    &mut self.summaries,
                    turn,
                    &mut self.log,
                );
            }
        }
    }

    /// Run both stages to completion.
    pub fn run_stages(&mut self) {
        let end = 2 * self.config.stage_hours;
        while self.clock.turn < end {
            self.step();
        }
        self.phase = StagePhase::Done;
    }

    pub fn run(&mut self) -> Result<RunSummary, SimError> {
        self.seed_world()?;
        let seed_posts = self.platform.posts().len();
        self.plan_agents()?;
        self.run_stages();
        Ok(self.summary(seed_posts))
    }

    pub fn summary(&self, seed_posts: usize) -> RunSummary {
        RunSummary {
            turns: self.clock.turn,
            events: self.log.len(),
            posts: self.platform.posts().len(),
            seed_posts,
            anomalies: self.log.iter().filter(|e| e.kind == EventKind::Anomaly).count(),
            fallback_plans: self.plans.iter().filter(|p| p.fallback).count(),
        }
    }
}

/// Browse and post for one agent in one turn.
fn act<F>(
    agent: &mut Agent,
    platform: &mut Platform,
    ctx: &AgentCtx<'_>,
    visible: &F,
    clock: SimClock,
    log: &mut EventLog,
) -> Result<(), AgentError>
where
    F: Fn(&Account) -> bool + Sync,
{
    let Some(plan) = agent.plan.clone() else {
        return Ok(());
    };
    if is_browse_turn(&plan, clock) {
        browse_session(agent, platform, ctx, visible, clock.turn, log)?;
    }
    for _ in 0..posts_due(&plan, clock) {
        let draft = draft_post(agent, ctx, clock.turn)?;
        publish_draft(agent, platform, &draft, clock.turn, log)?;
    }
    Ok(())
}
