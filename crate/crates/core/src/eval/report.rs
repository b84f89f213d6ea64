use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    cscore, distinct_n, follower_stats, mean, partition_in, ActionKind, EvalError, FollowerStats, Scorer, SideMeans,
};
use crate::config::SimConfig;
use crate::events::{EventKind, EventLog};
use crate::exec::Execution;
use crate::persona::PersonaProfile;
use crate::platform::{AccountKind, Snapshot};
use crate::sim::StagePhase;

/// Metric names, in CSV order.
pub const METRICS: [&str; 8] = [
    "bs_engaged",
    "bs_not_engaged",
    "delta_bs",
    "c_engaged",
    "c_not_engaged",
    "delta_c",
    "distinct_1",
    "distinct_2",
];

/// One action's metrics within a stage. For posts only the engaged side is
/// filled, holding the means over published posts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRow {
    pub action: ActionKind,
    pub engaged: usize,
    pub not_engaged: usize,
    pub bs_engaged: Option<f64>,
    pub bs_not_engaged: Option<f64>,
    pub delta_bs: Option<f64>,
    pub c_engaged: Option<f64>,
    pub c_not_engaged: Option<f64>,
    pub delta_c: Option<f64>,
    pub distinct_1: Option<f64>,
    pub distinct_2: Option<f64>,
}

impl ActionRow {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "bs_engaged" => self.bs_engaged,
            "bs_not_engaged" => self.bs_not_engaged,
            "delta_bs" => self.delta_bs,
            "c_engaged" => self.c_engaged,
            "c_not_engaged" => self.c_not_engaged,
            "delta_c" => self.delta_c,
            "distinct_1" => self.distinct_1,
            "distinct_2" => self.distinct_2,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: StagePhase,
    pub first_turn: u64,
    pub last_turn: u64,
    pub rows: Vec<ActionRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scorer: String,
    pub stages: Vec<StageReport>,
    pub followers: FollowerStats,
}

fn read(dir: &Path, name: &str) -> Result<String, EvalError> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(EvalError::Missing(name.to_string()));
    }
    fs::read_to_string(&path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<T, EvalError> {
    serde_json::from_str(&read(dir, name)?).map_err(|e| EvalError::Malformed {
        file: name.to_string(),
        message: e.to_string(),
    })
}

/// Similarity and C.score of one (persona, text) pair.
#[derive(Debug, Clone, Copy)]
struct Scored {
    sim: f64,
    c: f64,
}

fn score_all(jobs: &[(String, String)], scorer: &dyn Scorer, exec: Execution) -> Result<Vec<Scored>, EvalError> {
    exec.map(jobs, |(persona, body)| {
        Ok(Scored {
            sim: scorer.similarity(body, persona)?,
            c: f64::from(cscore(scorer.nli(persona, body)?)),
        })
    })
    .into_iter()
    .collect()
}

fn pooled(engaged: &[Scored], not_engaged: &[Scored]) -> (Option<SideMeans>, Option<SideMeans>) {
    let sims = |s: &[Scored]| s.iter().map(|x| x.sim).collect::<Vec<_>>();
    let cs = |s: &[Scored]| s.iter().map(|x| x.c).collect::<Vec<_>>();
    (
        SideMeans::from_scores(&sims(engaged), &sims(not_engaged)).ok(),
        SideMeans::from_scores(&cs(engaged), &cs(not_engaged)).ok(),
    )
}

fn side_mean(side: &[Scored], f: impl Fn(&Scored) -> f64) -> Option<f64> {
    (!side.is_empty()).then(|| mean(&side.iter().map(f).collect::<Vec<_>>()))
}

fn stage_report(
    stage: StagePhase,
    turns: RangeInclusive<u64>,
    log: &EventLog,
    personas: &BTreeMap<String, String>,
    scorer: &dyn Scorer,
    exec: Execution,
) -> Result<StageReport, EvalError> {
    // Every browsed (agent, post) pair is scored once and shared by the
    // three engagement rows.
    let mut keys: BTreeMap<(String, u64), usize> = BTreeMap::new();
    let mut jobs: Vec<(String, String)> = Vec::new();
    for e in log
        .iter()
        .filter(|e| e.kind == EventKind::Browse && turns.contains(&e.turn))
    {
        let (Some(persona), Some(post)) = (personas.get(&e.agent), e.target) else {
            continue;
        };
        keys.entry((e.agent.clone(), post)).or_insert_with(|| {
            jobs.push((persona.clone(), e.payload_str("body").unwrap_or_default().to_string()));
            jobs.len() - 1
        });
    }
    let scored = score_all(&jobs, scorer, exec)?;

    let mut rows = Vec::with_capacity(ActionKind::ALL.len());
    for kind in ActionKind::ENGAGEMENTS {
        let (mut engaged, mut not_engaged) = (Vec::new(), Vec::new());
        for agent in personas.keys() {
            let part = partition_in(log, agent, kind, turns.clone());
            let lookup = |p: &super::BrowsedPost| scored[keys[&(agent.clone(), p.post.0)]];
            engaged.extend(part.engaged.iter().map(lookup));
            not_engaged.extend(part.not_engaged.iter().map(lookup));
        }
        let (bs, c) = pooled(&engaged, &not_engaged);
        let (d1, d2) = if kind == ActionKind::Comment {
            let bodies: Vec<String> = log
                .iter()
                .filter(|e| e.kind == EventKind::Comment && turns.contains(&e.turn) && personas.contains_key(&e.agent))
                .filter_map(|e| e.payload_str("body").map(str::to_string))
                .collect();
            (distinct_n(&bodies, 1).ok(), distinct_n(&bodies, 2).ok())
        } else {
            (None, None)
        };
        rows.push(ActionRow {
            action: kind,
            engaged: engaged.len(),
            not_engaged: not_engaged.len(),
            bs_engaged: side_mean(&engaged, |s| s.sim),
            bs_not_engaged: side_mean(&not_engaged, |s| s.sim),
            delta_bs: bs.map(|m| m.delta),
            c_engaged: side_mean(&engaged, |s| s.c),
            c_not_engaged: side_mean(&not_engaged, |s| s.c),
            delta_c: c.map(|m| m.delta),
            distinct_1: d1,
            distinct_2: d2,
        });
    }

    let posts: Vec<(String, String)> = log
        .iter()
        .filter(|e| e.kind == EventKind::Post && turns.contains(&e.turn))
        .filter_map(|e| Some((personas.get(&e.agent)?.clone(), e.payload_str("body")?.to_string())))
        .collect();
    let post_scores = score_all(&posts, scorer, exec)?;
    let bodies: Vec<&str> = posts.iter().map(|(_, b)| b.as_str()).collect();
    rows.push(ActionRow {
        action: ActionKind::Post,
        engaged: posts.len(),
        not_engaged: 0,
        bs_engaged: side_mean(&post_scores, |s| s.sim),
        bs_not_engaged: None,
        delta_bs: None,
        c_engaged: side_mean(&post_scores, |s| s.c),
        c_not_engaged: None,
        delta_c: None,
        distinct_1: distinct_n(&bodies, 1).ok(),
        distinct_2: distinct_n(&bodies, 2).ok(),
    });
    Ok(StageReport {
        stage,
        first_turn: *turns.start(),
        last_turn: *turns.end(),
        rows,
    })
}

/// Compute the metric report of a run directory. Only regular agents are
/// measured; each agent's persona is reduced to personality, hobbies and
/// content preferences.
pub fn evaluate_run(run: &Path, scorer: &dyn Scorer, exec: Execution) -> Result<MetricReport, EvalError> {
    if !run.is_dir() {
        return Err(EvalError::Missing(run.display().to_string()));
    }
    let config: SimConfig = parse(run, "config.json")?;
    let events = read(run, "events.jsonl")?;
    let log = EventLog::read_jsonl(BufReader::new(events.as_bytes())).map_err(|message| EvalError::Malformed {
        file: "events.jsonl".into(),
        message,
    })?;
    let snapshot: Snapshot = parse(run, "snapshot.json")?;
    let mut personas = BTreeMap::new();
    for account in snapshot.accounts.iter().filter(|a| a.kind == AccountKind::Regular) {
        let name = format!("personas/{}.json", account.handle);
        let path = run.join(&name);
        if !path.exists() {
            return Err(EvalError::Missing(name));
        }
        let profile = PersonaProfile::load(&path).map_err(|e| EvalError::Malformed {
            file: name,
            message: e.to_string(),
        })?;
        personas.insert(account.handle.clone(), profile.scoring_text());
    }
    let h = config.stage_hours;
    let stages = vec![
        stage_report(StagePhase::Stage1, 1..=h, &log, &personas, scorer, exec)?,
        stage_report(StagePhase::Stage2, h + 1..=2 * h, &log, &personas, scorer, exec)?,
    ];
    Ok(MetricReport {
        scorer: scorer.name(),
        stages,
        followers: follower_stats(&snapshot),
    })
}

pub fn read_report(path: &Path) -> Result<MetricReport, EvalError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse(dir, &name)
}

fn stage_label(stage: StagePhase) -> &'static str {
    match stage {
        StagePhase::Stage1 => "stage1",
        StagePhase::Stage2 => "stage2",
        StagePhase::Seeding => "seeding",
        StagePhase::Done => "done",
    }
}

const ABSENT: &str = "n/a";

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| ABSENT.to_string(), |x| format!("{x:.4}"))
}

pub fn render_csv(report: &MetricReport) -> String {
    let mut out = String::from("stage,action,metric,value\n");
    for stage in &report.stages {
        for row in &stage.rows {
            for metric in METRICS {
                let value = row
                    .metric(metric)
                    .map_or_else(|| ABSENT.to_string(), |x| format!("{x:.6}"));
                let _ = writeln!(out, "{},{},{metric},{value}", stage_label(stage.stage), row.action);
            }
        }
    }
    out
}

pub fn render_markdown(report: &MetricReport) -> String {
    let mut out = format!("# Metric report\n\nScorer: {}\n\n", report.scorer);
    out.push_str("| Stage | Action | n | BERTScore | ΔBS | C.score | ΔC | Distinct-1 | Distinct-2 |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|\n");
    for stage in &report.stages {
        let label = stage_label(stage.stage);
        for row in &stage.rows {
            if row.action != ActionKind::Post {
                let _ = writeln!(
                    out,
                    "| {label} | not {} | {} | {} |  | {} |  |  |  |",
                    row.action,
                    row.not_engaged,
                    cell(row.bs_not_engaged),
                    cell(row.c_not_engaged),
                );
            }
            let _ = writeln!(
                out,
                "| {label} | {} | {} | {} | {} | {} | {} | {} | {} |",
                row.action,
                row.engaged,
                cell(row.bs_engaged),
                cell(row.delta_bs),
                cell(row.c_engaged),
                cell(row.delta_c),
                cell(row.distinct_1),
                cell(row.distinct_2),
            );
        }
    }
    let f = &report.followers;
    let _ = write!(
        out,
        "\n## Followers\n\nRegular agents: {}, total followers: {}, without followers: {}, top-1 share: {:.4}, top-2 share: {:.4}\n\n```\n",
        f.agents, f.total_followers, f.zero_followers, f.top1_share, f.top2_share
    );
    let widest = f.histogram.values().copied().max().unwrap_or(0);
    for (followers, agents) in &f.histogram {
        let bar = if widest == 0 { 0 } else { (agents * 40).div_ceil(widest) };
        let _ = writeln!(out, "{followers:>5} | {} {agents}", "#".repeat(bar));
    }
    out.push_str("```\n");
    out
}

/// Write `report.csv` and `report.md` into `dir`.
pub fn emit_report(report: &MetricReport, dir: &Path) -> Result<(), EvalError> {
    for (name, content) in [
        ("report.csv", render_csv(report)),
        ("report.md", render_markdown(report)),
    ] {
        let path = dir.join(name);
        fs::write(&path, content).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}
