//! Lifecycle states and transitions.
//!
//! Outside breaks a developer is `active_coding`. Inside a break the chain
//! of points `{break start} ∪ activity days ∪ {break end}` is walked gap by
//! gap: a gap no longer than the break's threshold is `active_non_coding`,
//! a longer one is `inactive`, and an inactive gap reaching `gone_days`
//! turns `gone` exactly `gone_days` after the last activity. A break without
//! any non-commit activity is inactive throughout.
//!
//! Silence after the last commit day is judged the same way against the
//! detector's closing threshold, up to the observation end. The final
//! segment is always flagged `ongoing` (right-censored).

use std::fmt;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::DeveloperTimeline;
use crate::rhythm::{pauses_from_days, DetectedBreak};

pub const DEFAULT_GONE_DAYS: u32 = 365;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum State {
    ActiveCoding,
    ActiveNonCoding,
    Inactive,
    Gone,
}

impl State {
    pub const ALL: [State; 4] = [
        State::ActiveCoding,
        State::ActiveNonCoding,
        State::Inactive,
        State::Gone,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            State::ActiveCoding => "active_coding",
            State::ActiveNonCoding => "active_non_coding",
            State::Inactive => "inactive",
            State::Gone => "gone",
        }
    }

    pub fn parse(s: &str) -> Option<State> {
        State::ALL.into_iter().find(|st| st.as_str() == s)
    }

    pub fn is_break(self) -> bool {
        self != State::ActiveCoding
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionName {
    BackToCoding,
    Reactivation,
    Comeback,
    PauseToNoncoding,
    PauseToInactive,
    DeepenToInactive,
    ExpireToGone,
    SelfLoop,
}

impl TransitionName {
    pub const ALL: [TransitionName; 8] = [
        TransitionName::BackToCoding,
        TransitionName::Reactivation,
        TransitionName::Comeback,
        TransitionName::PauseToNoncoding,
        TransitionName::PauseToInactive,
        TransitionName::DeepenToInactive,
        TransitionName::ExpireToGone,
        TransitionName::SelfLoop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TransitionName::BackToCoding => "back_to_coding",
            TransitionName::Reactivation => "reactivation",
            TransitionName::Comeback => "comeback",
            TransitionName::PauseToNoncoding => "pause_to_noncoding",
            TransitionName::PauseToInactive => "pause_to_inactive",
            TransitionName::DeepenToInactive => "deepen_to_inactive",
            TransitionName::ExpireToGone => "expire_to_gone",
            TransitionName::SelfLoop => "self_loop",
        }
    }

    pub fn parse(s: &str) -> Option<TransitionName> {
        TransitionName::ALL.into_iter().find(|t| t.as_str() == s)
    }

    /// Name of a `from -> to` edge, `None` for edges the model forbids.
    pub fn of(from: State, to: State) -> Option<TransitionName> {
        use State::*;
        use TransitionName::*;
        Some(match (from, to) {
            (a, b) if a == b => SelfLoop,
            (ActiveNonCoding, ActiveCoding) => BackToCoding,
            (Inactive, ActiveCoding | ActiveNonCoding) => Reactivation,
            (Gone, ActiveCoding | ActiveNonCoding) => Comeback,
            (ActiveCoding, ActiveNonCoding) => PauseToNoncoding,
            (ActiveCoding, Inactive) => PauseToInactive,
            (ActiveNonCoding, Inactive) => DeepenToInactive,
            (Inactive, Gone) => ExpireToGone,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSegment {
    pub state: State,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub ongoing: bool,
}

impl StateSegment {
    fn new(state: State, start: NaiveDate, end: NaiveDate) -> Self {
        Self {
            state,
            start,
            end,
            ongoing: false,
        }
    }

    pub fn length_days(&self) -> i64 {
        (self.end - self.start).num_days()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: State,
    pub to: State,
    pub at: NaiveDate,
    pub name: TransitionName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LifecycleConfig {
    pub gone_days: u32,
}

impl Default for LifecycleConfig {
    fn default() -> Self {
        Self {
            gone_days: DEFAULT_GONE_DAYS,
        }
    }
}

impl LifecycleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gone_days == 0 {
            return Err(Error::Config(
                "gone threshold must be at least one day".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifecycleTrace {
    pub developer_key: String,
    pub org_id: String,
    pub segments: Vec<StateSegment>,
    pub transitions: Vec<Transition>,
    /// Pauses between commit days that were not breaks.
    pub non_break_pauses: usize,
}

impl LifecycleTrace {
    pub fn first_day(&self) -> Option<NaiveDate> {
        self.segments.first().map(|s| s.start)
    }

    pub fn observation_end(&self) -> Option<NaiveDate> {
        self.segments.last().map(|s| s.end)
    }

    /// Years from the first commit day to the observation end.
    pub fn years_observed(&self) -> f64 {
        match (self.first_day(), self.observation_end()) {
            (Some(a), Some(b)) => (b - a).num_days() as f64 / 365.25,
            _ => 0.0,
        }
    }

    pub fn ever_in(&self, state: State) -> bool {
        self.segments.iter().any(|s| s.state == state)
    }

    pub fn count_in(&self, state: State) -> usize {
        self.segments.iter().filter(|s| s.state == state).count()
    }

    pub fn gone_at_cutoff(&self) -> bool {
        self.segments
            .last()
            .is_some_and(|s| s.state == State::Gone && s.ongoing)
    }

    /// Checks coverage, contiguity and transition legality.
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Consistency(format!("{}: {m}", self.developer_key)));
        for w in self.segments.windows(2) {
            if w[0].end != w[1].start {
                return err(format!("gap or overlap at {} / {}", w[0].end, w[1].start));
            }
            if w[1].state == State::Gone && w[0].state != State::Inactive {
                return err(format!("gone after {} at {}", w[0].state, w[1].start));
            }
        }
        if self.segments.iter().any(|s| s.end < s.start) {
            return err("segment ends before it starts".into());
        }
        if self.segments.iter().rev().skip(1).any(|s| s.ongoing) {
            return err("ongoing flag on a non-final segment".into());
        }
        for t in &self.transitions {
            if TransitionName::of(t.from, t.to) != Some(t.name) {
                return err(format!("illegal transition {} -> {}", t.from, t.to));
            }
        }
        Ok(())
    }
}

/// Labels the interval `[start, end]` of one inactivity period.
///
/// `activity` holds the non-commit activity days inside the closed interval,
/// sorted. The result is contiguous, starts at `start` and ends at `end`.
pub fn segment_interval(
    start: NaiveDate,
    end: NaiveDate,
    activity: &[NaiveDate],
    threshold: f64,
    cfg: &LifecycleConfig,
) -> Result<Vec<StateSegment>> {
    if end < start {
        return Err(Error::Consistency(format!(
            "interval {start}..{end} is reversed"
        )));
    }
    if let Some(d) = activity.iter().find(|d| **d < start || **d > end) {
        return Err(Error::Consistency(format!(
            "activity on {d} lies outside {start}..{end}"
        )));
    }
    let has_activity = !activity.is_empty();
    let mut points = Vec::with_capacity(activity.len() + 2);
    points.push(start);
    points.extend_from_slice(activity);
    points.push(end);
    points.sort_unstable();
    points.dedup();

    let gone = Duration::days(cfg.gone_days as i64);
    let mut out: Vec<StateSegment> = Vec::new();
    let push = |out: &mut Vec<StateSegment>, seg: StateSegment| {
        if let Some(last) = out.last_mut() {
            if last.state == seg.state && seg.state != State::Gone {
                last.end = seg.end;
                return;
            }
            if last.state == State::Gone && seg.state == State::Inactive {
                // the activity that ended the gone stretch is a comeback
                out.push(StateSegment::new(
                    State::ActiveNonCoding,
                    seg.start,
                    seg.start,
                ));
            }
        }
        out.push(seg);
    };

    if points.len() == 1 {
        let state = if has_activity {
            State::ActiveNonCoding
        } else {
            State::Inactive
        };
        return Ok(vec![StateSegment::new(state, start, end)]);
    }
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = (b - a).num_days();
        if has_activity && len as f64 <= threshold {
            push(&mut out, StateSegment::new(State::ActiveNonCoding, a, b));
        } else if len >= cfg.gone_days as i64 {
            push(&mut out, StateSegment::new(State::Inactive, a, a + gone));
            push(&mut out, StateSegment::new(State::Gone, a + gone, b));
        } else {
            push(&mut out, StateSegment::new(State::Inactive, a, b));
        }
    }
    Ok(out)
}

/// Labels one detected break using its own threshold.
pub fn segment_break(
    brk: &DetectedBreak,
    activity: &[NaiveDate],
    cfg: &LifecycleConfig,
) -> Result<Vec<StateSegment>> {
    segment_interval(brk.start(), brk.end(), activity, brk.threshold, cfg)
}

fn push_merged(segments: &mut Vec<StateSegment>, seg: StateSegment) {
    if let Some(last) = segments.last_mut() {
        if last.state == seg.state && last.end == seg.start && seg.state != State::Gone {
            last.end = seg.end;
            return;
        }
    }
    segments.push(seg);
}

/// Builds a developer's full state timeline from their detected breaks.
///
/// `closing_threshold` judges the silence between the last commit day and
/// the observation end; `None` leaves that stretch active.
pub fn build_trace(
    timeline: &DeveloperTimeline,
    breaks: &[DetectedBreak],
    closing_threshold: Option<f64>,
    cfg: &LifecycleConfig,
) -> Result<LifecycleTrace> {
    cfg.validate()?;
    let days = &timeline.commit_days;
    let (Some(&first), Some(&last)) = (days.first(), days.last()) else {
        return Err(Error::Consistency(format!(
            "{}: no commit days to trace",
            timeline.developer_key
        )));
    };
    let cutoff = timeline.observation_end_day();
    if cutoff < last {
        return Err(Error::Consistency(format!(
            "{}: commit after observation end",
            timeline.developer_key
        )));
    }

    let mut sorted: Vec<&DetectedBreak> = breaks.iter().collect();
    sorted.sort_by_key(|b| (b.start(), b.end()));
    for w in sorted.windows(2) {
        if w[0].end() > w[1].start() {
            return Err(Error::Consistency(format!(
                "{}: overlapping breaks {}..{} and {}..{}",
                timeline.developer_key,
                w[0].start(),
                w[0].end(),
                w[1].start(),
                w[1].end()
            )));
        }
    }
    if let Some(b) = sorted.iter().find(|b| b.start() < first || b.end() > last) {
        return Err(Error::Consistency(format!(
            "{}: break {}..{} outside the commit history",
            timeline.developer_key,
            b.start(),
            b.end()
        )));
    }

    let mut segments: Vec<StateSegment> = Vec::new();
    let mut cursor = first;
    for b in &sorted {
        push_merged(
            &mut segments,
            StateSegment::new(State::ActiveCoding, cursor, b.start()),
        );
        let activity = timeline.non_commit_days_between(b.start(), b.end());
        for s in segment_break(b, &activity, cfg)? {
            push_merged(&mut segments, s);
        }
        cursor = b.end();
    }
    push_merged(
        &mut segments,
        StateSegment::new(State::ActiveCoding, cursor, last),
    );

    let trailing = (cutoff - last).num_days();
    match closing_threshold {
        Some(t) if trailing as f64 > t => {
            let activity = timeline.non_commit_days_between(last, cutoff);
            for s in segment_interval(last, cutoff, &activity, t, cfg)? {
                push_merged(&mut segments, s);
            }
        }
        _ => push_merged(
            &mut segments,
            StateSegment::new(State::ActiveCoding, last, cutoff),
        ),
    }
    if let Some(s) = segments.last_mut() {
        s.ongoing = true;
    }

    let mut transitions = Vec::new();
    for w in segments.windows(2) {
        let name = TransitionName::of(w[0].state, w[1].state).ok_or_else(|| {
            Error::Consistency(format!(
                "{}: forbidden transition {} -> {} at {}",
                timeline.developer_key, w[0].state, w[1].state, w[1].start
            ))
        })?;
        transitions.push(Transition {
            from: w[0].state,
            to: w[1].state,
            at: w[1].start,
            name,
        });
    }

    let break_keys: std::collections::HashSet<(NaiveDate, NaiveDate)> =
        sorted.iter().map(|b| (b.start(), b.end())).collect();
    let non_break_pauses = pauses_from_days(days)
        .iter()
        .filter(|p| !break_keys.contains(&(p.start, p.end)))
        .count();

    let trace = LifecycleTrace {
        developer_key: timeline.developer_key.clone(),
        org_id: timeline.org_id.clone(),
        segments,
        transitions,
        non_break_pauses,
    };
    trace.validate()?;
    Ok(trace)
}
