use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Daily half-open hour range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HourWindow {
    pub start: u8,
    pub end: u8,
}

impl HourWindow {
    pub fn new(start: u8, end: u8) -> Option<Self> {
        (start < end && end <= 24).then_some(HourWindow { start, end })
    }

    pub fn contains(&self, hour: u8) -> bool {
        self.start <= hour && hour < self.end
    }

    pub fn len(&self) -> u8 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSpec {
    pub browse_window: HourWindow,
    pub p_like: f64,
    pub p_reblog: f64,
    pub p_comment: f64,
    /// Day of week, 1 through 7.
    pub post_day: u8,
    pub post_window: HourWindow,
    pub posts_per_week: u32,
}

impl PlanSpec {
    pub fn validate(&self) -> Result<(), String> {
        for w in [self.browse_window, self.post_window] {
            if HourWindow::new(w.start, w.end).is_none() {
                return Err(format!("invalid window {}-{}", w.start, w.end));
            }
        }
        for p in [self.p_like, self.p_reblog, self.p_comment] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("probability {p} outside [0,1]"));
            }
        }
        if !(1..=7).contains(&self.post_day) {
            return Err(format!("post day {} outside 1..=7", self.post_day));
        }
        if self.posts_per_week == 0 {
            return Err("posts_per_week must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanParseError {
    #[error("plan is missing {0}")]
    Missing(&'static str),
    #[error("plan has malformed {field}: {detail}")]
    Malformed { field: &'static str, detail: String },
}

impl PlanParseError {
    pub fn field(&self) -> &'static str {
        match self {
            PlanParseError::Missing(f) => f,
            PlanParseError::Malformed { field, .. } => field,
        }
    }
}

struct Field {
    name: &'static str,
    label: Regex,
    value: Regex,
}

impl Field {
    fn new(name: &'static str, label: &str, value: &str) -> Self {
        Field {
            name,
            label: Regex::new(&format!(r"(?i){label}\s*:")).unwrap(),
            value: Regex::new(&format!(r"(?i)\A[ \t]*{value}")).unwrap(),
        }
    }

    fn captures<'t>(&self, text: &'t str) -> Result<regex::Captures<'t>, PlanParseError> {
        let label = self.label.find(text).ok_or(PlanParseError::Missing(self.name))?;
        let rest = &text[label.end()..];
        self.value.captures(rest).ok_or_else(|| PlanParseError::Malformed {
            field: self.name,
            detail: rest.lines().next().unwrap_or("").trim().to_string(),
        })
    }
}

const TIME_RANGE: &str = r"(\d{1,2}):(\d{2})\s*-\s*(\d{1,2}):(\d{2})";
const PERCENT: &str = r"(\d{1,3}(?:\.\d+)?)\s*%";

static BROWSE: LazyLock<Field> =
    LazyLock::new(|| Field::new("browsing time period", "browsing time period", TIME_RANGE));
static LIKE: LazyLock<Field> = LazyLock::new(|| Field::new("probability of liking", "probability of liking", PERCENT));
static REBLOG: LazyLock<Field> =
    LazyLock::new(|| Field::new("probability of forwarding", "probability of forwarding", PERCENT));
static COMMENT: LazyLock<Field> =
    LazyLock::new(|| Field::new("probability of commenting", "probability of commenting", PERCENT));
static POSTING: LazyLock<Field> = LazyLock::new(|| {
    Field::new(
        "posting time period",
        "posting time period",
        &format!(r"day\s*(\d{{1,2}})\s*-\s*{TIME_RANGE}"),
    )
});
static FREQUENCY: LazyLock<Field> = LazyLock::new(|| {
    Field::new(
        "posting frequency",
        "frequency of posting",
        r"(\d{1,4})\s*times?\s+per\s+week",
    )
});

fn num<T: std::str::FromStr>(caps: &regex::Captures<'_>, i: usize) -> T
where
    T::Err: fmt::Debug,
{
    caps[i].parse().expect("regex guarantees digits")
}

fn window(field: &'static str, caps: &regex::Captures<'_>, first: usize) -> Result<HourWindow, PlanParseError> {
    let (sh, sm, eh, em): (u8, u8, u8, u8) = (
        num(caps, first),
        num(caps, first + 1),
        num(caps, first + 2),
        num(caps, first + 3),
    );
    let malformed = |detail: String| PlanParseError::Malformed { field, detail };
    if sm >= 60 || em >= 60 || sh > 24 || eh > 24 || (eh == 24 && em > 0) {
        return Err(malformed(format!(
            "{sh:02}:{sm:02}-{eh:02}:{em:02} is not a valid time range"
        )));
    }
    HourWindow::new(sh, eh).ok_or_else(|| malformed(format!("window {sh}-{eh} is empty")))
}

/// Percent text to a probability on a basis-point grid, so that rendering
/// and re-parsing are exact.
fn percent(field: &'static str, caps: &regex::Captures<'_>) -> Result<f64, PlanParseError> {
    let pct: f64 = caps[1].parse().map_err(|_| PlanParseError::Malformed {
        field,
        detail: caps[1].to_string(),
    })?;
    if pct > 100.0 {
        return Err(PlanParseError::Malformed {
            field,
            detail: format!("{pct}% exceeds 100%"),
        });
    }
    Ok((pct * 100.0).round() / 10_000.0)
}

/// Extract a plan from completion text. Labels are case-insensitive and may
/// appear in any order; minutes are truncated to whole hours.
pub fn parse_plan(text: &str) -> Result<PlanSpec, PlanParseError> {
    let browse = BROWSE.captures(text)?;
    let browse_window = window(BROWSE.name, &browse, 1)?;
    let p_like = percent(LIKE.name, &LIKE.captures(text)?)?;
    let p_reblog = percent(REBLOG.name, &REBLOG.captures(text)?)?;
    let p_comment = percent(COMMENT.name, &COMMENT.captures(text)?)?;
    let posting = POSTING.captures(text)?;
    let post_day: u8 = num(&posting, 1);
    if !(1..=7).contains(&post_day) {
        return Err(PlanParseError::Malformed {
            field: POSTING.name,
            detail: format!("day {post_day} outside 1-7"),
        });
    }
    let post_window = window(POSTING.name, &posting, 2)?;
    let freq = FREQUENCY.captures(text)?;
    let posts_per_week: u32 = num(&freq, 1);
    if posts_per_week == 0 {
        return Err(PlanParseError::Malformed {
            field: FREQUENCY.name,
            detail: "zero posts per week".into(),
        });
    }
    Ok(PlanSpec {
        browse_window,
        p_like,
        p_reblog,
        p_comment,
        post_day,
        post_window,
        posts_per_week,
    })
}

fn render_percent(p: f64) -> String {
    let bp = (p * 10_000.0).round() as u64;
    let (whole, frac) = (bp / 100, bp % 100);
    match frac {
        0 => format!("{whole}"),
        f if f % 10 == 0 => format!("{whole}.{}", f / 10),
        f => format!("{whole}.{f:02}"),
    }
}

/// Render in the plan grammar the parser accepts.
pub fn render_plan(plan: &PlanSpec) -> String {
    format!(
        "Browsing time period: {:02}:00-{:02}:00\n\
         Probability of liking: {}%\n\
         Probability of forwarding: {}%\n\
         Probability of commenting: {}%\n\
         Posting time period: day {}-{:02}:00-{:02}:00 Frequency of posting: {} times per week",
        plan.browse_window.start,
        plan.browse_window.end,
        render_percent(plan.p_like),
        render_percent(plan.p_reblog),
        render_percent(plan.p_comment),
        plan.post_day,
        plan.post_window.start,
        plan.post_window.end,
        plan.posts_per_week,
    )
}
