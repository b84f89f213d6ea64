use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EvalError, Scorer};
use crate::events::{EventKind, EventLog};
use crate::platform::{AccountKind, PostId, Snapshot};
use crate::retrieval::tokenize;

/// Unique n-grams over total n-gram occurrences across all texts.
pub fn distinct_n<S: AsRef<str>>(texts: &[S], n: usize) -> Result<f64, EvalError> {
    if n == 0 {
        return Err(EvalError::UndefinedMetric("distinct-0".into()));
    }
    let mut unique = BTreeSet::new();
    let mut total = 0usize;
    for text in texts {
        let tokens = tokenize(text.as_ref());
        for gram in tokens.windows(n) {
            total += 1;
            unique.insert(gram.to_vec());
        }
    }
    if total == 0 {
        return Err(EvalError::UndefinedMetric(format!("distinct-{n}: no {n}-grams")));
    }
    Ok(unique.len() as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NliLabel {
    Entailment,
    Neutral,
    Contradiction,
}

impl FromStr for NliLabel {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "entailment" => Ok(NliLabel::Entailment),
            "neutral" => Ok(NliLabel::Neutral),
            "contradiction" => Ok(NliLabel::Contradiction),
            other => Err(EvalError::Scorer(format!("unknown NLI label {other:?}"))),
        }
    }
}

pub fn cscore(label: NliLabel) -> i32 {
    match label {
        NliLabel::Entailment => 1,
        NliLabel::Neutral => 0,
        NliLabel::Contradiction => -1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Like,
    Reblog,
    Comment,
    Post,
}

impl ActionKind {
    pub const ALL: [ActionKind; 4] = [
        ActionKind::Like,
        ActionKind::Reblog,
        ActionKind::Comment,
        ActionKind::Post,
    ];
    /// Actions that split browsed posts into engaged and not engaged.
    pub const ENGAGEMENTS: [ActionKind; 3] = [ActionKind::Like, ActionKind::Reblog, ActionKind::Comment];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Like => "like",
            ActionKind::Reblog => "reblog",
            ActionKind::Comment => "comment",
            ActionKind::Post => "post",
        }
    }

    fn event_kind(self) -> EventKind {
        match self {
            ActionKind::Like => EventKind::Like,
            ActionKind::Reblog => EventKind::Reblog,
            ActionKind::Comment => EventKind::Comment,
            ActionKind::Post => EventKind::Post,
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrowsedPost {
    pub post: PostId,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngagementPartition {
    pub kind: ActionKind,
    pub engaged: Vec<BrowsedPost>,
    pub not_engaged: Vec<BrowsedPost>,
}

/// Split the posts `agent` browsed into those it acted on with `kind` and
/// the rest. Quota-suppressed decisions count as engaged.
pub fn partition(log: &EventLog, agent: &str, kind: ActionKind) -> EngagementPartition {
    partition_in(log, agent, kind, 0..=u64::MAX)
}

/// [`partition`] restricted to events whose turn lies in `turns`.
pub fn partition_in(log: &EventLog, agent: &str, kind: ActionKind, turns: RangeInclusive<u64>) -> EngagementPartition {
    let wanted = kind.event_kind();
    let mut browsed = Vec::new();
    let mut acted = BTreeSet::new();
    for e in log.iter().filter(|e| e.agent == agent && turns.contains(&e.turn)) {
        let Some(target) = e.target else { continue };
        if e.kind == EventKind::Browse {
            browsed.push(BrowsedPost {
                post: PostId(target),
                body: e.payload_str("body").unwrap_or_default().to_string(),
            });
        } else if e.kind == wanted {
            acted.insert(target);
        }
    }
    let (engaged, not_engaged) = browsed.into_iter().partition(|b| acted.contains(&b.post.0));
    EngagementPartition {
        kind,
        engaged,
        not_engaged,
    }
}

/// Mean score per side and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideMeans {
    pub engaged: f64,
    pub not_engaged: f64,
    pub delta: f64,
}

impl SideMeans {
    pub fn from_scores(engaged: &[f64], not_engaged: &[f64]) -> Result<SideMeans, EvalError> {
        if engaged.is_empty() || not_engaged.is_empty() {
            return Err(EvalError::EmptySide);
        }
        let e = mean(engaged);
        let n = mean(not_engaged);
        Ok(SideMeans {
            engaged: e,
            not_engaged: n,
            delta: e - n,
        })
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaMetrics {
    pub similarity: SideMeans,
    pub consistency: SideMeans,
}

/// Similarity and consistency of each side of `partition` against the
/// persona text.
pub fn delta_metrics(
    partition: &EngagementPartition,
    persona_text: &str,
    scorer: &dyn Scorer,
) -> Result<DeltaMetrics, EvalError> {
    if partition.engaged.is_empty() || partition.not_engaged.is_empty() {
        return Err(EvalError::EmptySide);
    }
    let score = |side: &[BrowsedPost]| -> Result<(Vec<f64>, Vec<f64>), EvalError> {
        let mut sims = Vec::with_capacity(side.len());
        let mut cs = Vec::with_capacity(side.len());
        for p in side {
            sims.push(scorer.similarity(&p.body, persona_text)?);
            cs.push(f64::from(cscore(scorer.nli(persona_text, &p.body)?)));
        }
        Ok((sims, cs))
    };
    let (es, ec) = score(&partition.engaged)?;
    let (ns, nc) = score(&partition.not_engaged)?;
    Ok(DeltaMetrics {
        similarity: SideMeans::from_scores(&es, &ns)?,
        consistency: SideMeans::from_scores(&ec, &nc)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerStats {
    pub agents: usize,
    pub total_followers: usize,
    /// Number of agents per follower count.
    pub histogram: BTreeMap<usize, usize>,
    pub zero_followers: usize,
    /// Share of all followers held by the best-followed agent.
    pub top1_share: f64,
    pub top2_share: f64,
}

pub fn follower_stats_from_counts(counts: &[usize]) -> FollowerStats {
    let mut histogram = BTreeMap::new();
    for &c in counts {
        *histogram.entry(c).or_insert(0) += 1;
    }
    let total: usize = counts.iter().sum();
    let mut sorted = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let share = |k: usize| {
        if total == 0 {
            0.0
        } else {
            sorted.iter().take(k).sum::<usize>() as f64 / total as f64
        }
    };
    FollowerStats {
        agents: counts.len(),
        total_followers: total,
        zero_followers: counts.iter().filter(|&&c| c == 0).count(),
        top1_share: share(1),
        top2_share: share(2),
        histogram,
    }
}

/// Follower distribution over regular accounts.
pub fn follower_stats(snapshot: &Snapshot) -> FollowerStats {
    let counts: Vec<usize> = snapshot
        .accounts
        .iter()
        .filter(|a| a.kind == AccountKind::Regular)
        .map(|a| a.follower_ids.len())
        .collect();
    follower_stats_from_counts(&counts)
}
