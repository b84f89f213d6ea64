//! Metrics over a finished run: lexical diversity, engaged-versus-unengaged
//! similarity and consistency deltas, and follower concentration.

mod metrics;
mod report;
mod scorer;

pub use metrics::{
    cscore, delta_metrics, distinct_n, follower_stats, follower_stats_from_counts, mean, partition, partition_in,
    ActionKind, BrowsedPost, DeltaMetrics, EngagementPartition, FollowerStats, NliLabel, SideMeans,
};
pub use report::{emit_report, evaluate_run, read_report, ActionRow, MetricReport, StageReport, METRICS};
pub use scorer::{MockScorer, Scorer, SidecarScorer, MOCK_ENTAILMENT_SIMILARITY};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("a partition side is empty")]
    EmptySide,
    #[error("scorer: {0}")]
    Scorer(String),
    #[error("missing: {0}")]
    Missing(String),
    #[error("malformed {file}: {message}")]
    Malformed { file: String, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
