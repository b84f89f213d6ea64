//! Activity sampling, plan generation and parsing, and per-session quotas.

mod generate;
mod plan;

pub use generate::{fallback_plan, generate_plan, plan_prompt, GeneratedPlan, PLAN_ATTEMPTS};
pub use plan::{parse_plan, render_plan, HourWindow, PlanParseError, PlanSpec};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clock::SimClock;

pub const DEFAULT_ALPHA: f64 = 2.0;
pub const DEFAULT_X_MIN: f64 = 0.1;
pub const DEFAULT_SESSION_SIZE: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanningError {
    #[error("invalid sampler parameters: {0}")]
    InvalidParameters(String),
}

/// Activity level in `(0, 1]`, where 1 is full activity.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActivityLevel(f64);

impl ActivityLevel {
    pub fn new(value: f64) -> Option<Self> {
        (value > 0.0 && value <= 1.0).then_some(ActivityLevel(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_params(alpha: f64, x_min: f64) -> Result<(), PlanningError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(PlanningError::InvalidParameters(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !(x_min > 0.0 && x_min <= 1.0) {
        return Err(PlanningError::InvalidParameters(format!(
            "x_min must be in (0, 1], got {x_min}"
        )));
    }
    Ok(())
}

/// Inverse-CDF draw from the Pareto law with density
/// `alpha * x_min^alpha / x^(alpha + 1)` on `[x_min, inf)`.
pub fn sample_pareto<R: Rng + ?Sized>(rng: &mut R, alpha: f64, x_min: f64) -> Result<f64, PlanningError> {
    check_params(alpha, x_min)?;
    let u = 1.0 - rng.random::<f64>();
    Ok(pareto_inverse_cdf(u, alpha, x_min))
}

/// `u` in `(0, 1]`.
pub fn pareto_inverse_cdf(u: f64, alpha: f64, x_min: f64) -> f64 {
    x_min / u.powf(1.0 / alpha)
}

/// Pareto draw clamped to full activity.
pub fn sample_activity<R: Rng + ?Sized>(rng: &mut R, alpha: f64, x_min: f64) -> Result<ActivityLevel, PlanningError> {
    let x = sample_pareto(rng, alpha, x_min)?;
    Ok(ActivityLevel(x.min(1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionQuota {
    pub session_size: usize,
    pub max_likes: usize,
    pub max_reblogs: usize,
    pub max_comments: usize,
}

fn round_half_up(x: f64) -> usize {
    // Snap away representation noise so 0.15 * 10 counts as an exact half.
    let snapped = (x * 1e9).round() / 1e9;
    (snapped + 0.5).floor().max(0.0) as usize
}

pub fn quotas(plan: &PlanSpec, session_size: usize) -> SessionQuota {
    let k = session_size.max(1);
    let q = |p: f64| round_half_up(p * k as f64).min(k);
    SessionQuota {
        session_size: k,
        max_likes: q(plan.p_like),
        max_reblogs: q(plan.p_reblog),
        max_comments: q(plan.p_comment),
    }
}

pub fn is_browse_turn(plan: &PlanSpec, clock: SimClock) -> bool {
    plan.browse_window.contains(clock.hour())
}

/// Posts are spread one per hour from the start of the weekly post window;
/// posts that do not fit in the window are dropped.
pub fn posts_due(plan: &PlanSpec, clock: SimClock) -> u32 {
    let hour = clock.hour();
    let due = clock.day() == plan.post_day
        && plan.post_window.contains(hour)
        && u32::from(hour - plan.post_window.start) < plan.posts_per_week;
    u32::from(due)
}

pub fn is_post_turn(plan: &PlanSpec, clock: SimClock) -> bool {
    posts_due(plan, clock) > 0
}
