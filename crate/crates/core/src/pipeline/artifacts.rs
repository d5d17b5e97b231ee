//! CSV and JSON artifacts exchanged between pipeline stages.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{CoreMember, CoreSelection, Report, SensitivityRow};
use crate::error::{Error, Result};
use crate::lifecycle::{LifecycleTrace, State, StateSegment, Transition, TransitionName};
use crate::rhythm::{BreakSource, DetectedBreak, Detection, Pause, Window, WindowStatus};

pub const CORE_MEMBERS: &str = "core_members.csv";
pub const CORE_SUMMARY: &str = "core_summary.csv";
pub const BREAKS: &str = "breaks.csv";
pub const DETECTOR_SUMMARY: &str = "detector_summary.csv";
pub const SEGMENTS: &str = "segments.csv";
pub const TRANSITIONS: &str = "transitions.csv";
pub const TRACE_DEVELOPERS: &str = "trace_developers.csv";
pub const BREAK_FREQUENCY: &str = "break_frequency.csv";
pub const DEVELOPER_BREAKS: &str = "developer_breaks.csv";
pub const BREAK_DURATIONS: &str = "break_durations.csv";
pub const PAIRED_TESTS: &str = "paired_tests.csv";
pub const TRANSITION_EDGES: &str = "transition_edges.csv";
pub const TRANSITION_ROWS: &str = "transition_rows.csv";
pub const ODDS_RATIO: &str = "odds_ratio.csv";
pub const SENSITIVITY: &str = "sensitivity.csv";

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    })?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    })?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_core(dir: &Path, core: &CoreSelection) -> Result<()> {
    write_rows(&dir.join(CORE_MEMBERS), &core.members)?;
    write_rows(&dir.join(CORE_SUMMARY), &core.summary)
}

pub fn read_core_members(path: &Path) -> Result<Vec<CoreMember>> {
    read_rows(path)
}

#[derive(Debug, Serialize, Deserialize)]
struct BreakRow {
    developer: String,
    start: NaiveDate,
    end: NaiveDate,
    length: i64,
    threshold: f64,
    window_start: NaiveDate,
    window_end: NaiveDate,
    source: BreakSource,
}

#[derive(Debug, Serialize, Deserialize)]
struct DetectorRow {
    developer: String,
    windows: usize,
    computed_windows: usize,
    carried_windows: usize,
    skipped_windows: usize,
    mean_valid_threshold: Option<f64>,
    closing_threshold: Option<f64>,
}

pub fn write_detections(dir: &Path, detections: &BTreeMap<String, Detection>) -> Result<()> {
    let breaks = detections.iter().flat_map(|(dev, d)| {
        d.breaks.iter().map(move |b| BreakRow {
            developer: dev.clone(),
            start: b.pause.start,
            end: b.pause.end,
            length: b.pause.length_days,
            threshold: b.threshold,
            window_start: b.window.start,
            window_end: b.window.end,
            source: b.source,
        })
    });
    write_rows(&dir.join(BREAKS), breaks)?;
    let summary = detections.iter().map(|(dev, d)| {
        let count = |s: WindowStatus| d.windows.iter().filter(|w| w.status == s).count();
        DetectorRow {
            developer: dev.clone(),
            windows: d.windows.len(),
            computed_windows: count(WindowStatus::Computed),
            carried_windows: count(WindowStatus::CarriedOver),
            skipped_windows: count(WindowStatus::Skipped),
            mean_valid_threshold: d.mean_valid_threshold,
            closing_threshold: d.closing_threshold,
        }
    });
    write_rows(&dir.join(DETECTOR_SUMMARY), summary)
}

/// Reads back the detector output. Window records are not persisted, so
/// the returned detections carry breaks and thresholds only.
pub fn read_detections(dir: &Path) -> Result<BTreeMap<String, Detection>> {
    let mut out: BTreeMap<String, Detection> = BTreeMap::new();
    for row in read_rows::<DetectorRow>(&dir.join(DETECTOR_SUMMARY))? {
        out.insert(
            row.developer,
            Detection {
                breaks: Vec::new(),
                windows: Vec::new(),
                mean_valid_threshold: row.mean_valid_threshold,
                closing_threshold: row.closing_threshold,
            },
        );
    }
    for row in read_rows::<BreakRow>(&dir.join(BREAKS))? {
        let det = out.get_mut(&row.developer).ok_or_else(|| {
            Error::Format(format!(
                "break for {} missing from {DETECTOR_SUMMARY}",
                row.developer
            ))
        })?;
        let pause = Pause::new(row.start, row.end);
        if pause.length_days != row.length {
            return Err(Error::Format(format!(
                "{BREAKS}: length {} does not match {}..{}",
                row.length, row.start, row.end
            )));
        }
        det.breaks.push(DetectedBreak {
            pause,
            window: Window {
                start: row.window_start,
                end: row.window_end,
            },
            threshold: row.threshold,
            source: row.source,
        });
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentRow {
    developer: String,
    org: String,
    state: State,
    start: NaiveDate,
    end: NaiveDate,
    length: i64,
    ongoing: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct TransitionRow {
    developer: String,
    org: String,
    name: TransitionName,
    from: State,
    to: State,
    at: NaiveDate,
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceDeveloperRow {
    developer: String,
    org: String,
    first_day: Option<NaiveDate>,
    observation_end: Option<NaiveDate>,
    non_break_pauses: usize,
}

pub fn write_traces(dir: &Path, traces: &[LifecycleTrace]) -> Result<()> {
    let mut sorted: Vec<&LifecycleTrace> = traces.iter().collect();
    sorted.sort_by(|a, b| (&a.org_id, &a.developer_key).cmp(&(&b.org_id, &b.developer_key)));
    write_rows(
        &dir.join(SEGMENTS),
        sorted.iter().flat_map(|t| {
            t.segments.iter().map(|s| SegmentRow {
                developer: t.developer_key.clone(),
                org: t.org_id.clone(),
                state: s.state,
                start: s.start,
                end: s.end,
                length: s.length_days(),
                ongoing: s.ongoing,
            })
        }),
    )?;
    write_rows(
        &dir.join(TRANSITIONS),
        sorted.iter().flat_map(|t| {
            t.transitions.iter().map(|x| TransitionRow {
                developer: t.developer_key.clone(),
                org: t.org_id.clone(),
                name: x.name,
                from: x.from,
                to: x.to,
                at: x.at,
            })
        }),
    )?;
    write_rows(
        &dir.join(TRACE_DEVELOPERS),
        sorted.iter().map(|t| TraceDeveloperRow {
            developer: t.developer_key.clone(),
            org: t.org_id.clone(),
            first_day: t.first_day(),
            observation_end: t.observation_end(),
            non_break_pauses: t.non_break_pauses,
        }),
    )
}

pub fn read_traces(dir: &Path) -> Result<Vec<LifecycleTrace>> {
    let mut traces: BTreeMap<(String, String), LifecycleTrace> = BTreeMap::new();
    for d in read_rows::<TraceDeveloperRow>(&dir.join(TRACE_DEVELOPERS))? {
        traces.insert(
            (d.org.clone(), d.developer.clone()),
            LifecycleTrace {
                developer_key: d.developer,
                org_id: d.org,
                segments: Vec::new(),
                transitions: Vec::new(),
                non_break_pauses: d.non_break_pauses,
            },
        );
    }
    let missing = |dev: &str| Error::Format(format!("{dev} missing from {TRACE_DEVELOPERS}"));
    for s in read_rows::<SegmentRow>(&dir.join(SEGMENTS))? {
        let t = traces
            .get_mut(&(s.org.clone(), s.developer.clone()))
            .ok_or_else(|| missing(&s.developer))?;
        t.segments.push(StateSegment {
            state: s.state,
            start: s.start,
            end: s.end,
            ongoing: s.ongoing,
        });
    }
    for x in read_rows::<TransitionRow>(&dir.join(TRANSITIONS))? {
        let t = traces
            .get_mut(&(x.org.clone(), x.developer.clone()))
            .ok_or_else(|| missing(&x.developer))?;
        t.transitions.push(Transition {
            from: x.from,
            to: x.to,
            at: x.at,
            name: x.name,
        });
    }
    let traces: Vec<LifecycleTrace> = traces.into_values().collect();
    for t in &traces {
        t.validate()?;
    }
    Ok(traces)
}

#[derive(Serialize)]
struct FrequencyRow<'a> {
    org: &'a str,
    developers: usize,
    non_coding: usize,
    non_coding_share: f64,
    inactive: usize,
    inactive_share: f64,
    gone: usize,
    gone_share: f64,
    gone_at_cutoff: usize,
    gone_at_cutoff_share: f64,
}

#[derive(Serialize)]
struct DeveloperBreakRow<'a> {
    org: &'a str,
    developer: &'a str,
    non_coding: usize,
    inactive: usize,
    gone: usize,
    years_observed: f64,
    breaks_per_year: String,
}

#[derive(Serialize)]
struct DurationOut<'a> {
    org: &'a str,
    state: State,
    n: usize,
    mean_days: f64,
    median_days: f64,
    sd_days_population: f64,
}

#[derive(Serialize)]
struct PairedOut<'a> {
    org: &'a str,
    n_pairs: usize,
    n_nonzero: String,
    w_plus: String,
    p_raw: String,
    p_adjusted: String,
    p_method: String,
    cliffs_delta: String,
    magnitude: String,
}

#[derive(Serialize)]
struct EdgeOut<'a> {
    scope: &'a str,
    from: State,
    to: State,
    count: u64,
    probability: f64,
}

#[derive(Serialize)]
struct RowOut<'a> {
    scope: &'a str,
    state: State,
    outgoing: u64,
    empty: bool,
}

#[derive(Serialize)]
struct OddsOut {
    n: u64,
    low_gone: u64,
    low_not_gone: u64,
    high_gone: u64,
    high_not_gone: u64,
    odds_ratio: f64,
    ci95_low: f64,
    ci95_high: f64,
    corrected: bool,
    significant: bool,
    logistic_odds_ratio: String,
}

pub fn write_report(dir: &Path, rep: &Report) -> Result<()> {
    write_rows(
        &dir.join(BREAK_FREQUENCY),
        rep.frequency.per_org.iter().map(|r| FrequencyRow {
            org: &r.org,
            developers: r.developers,
            non_coding: r.non_coding,
            non_coding_share: r.share(r.non_coding),
            inactive: r.inactive,
            inactive_share: r.share(r.inactive),
            gone: r.gone,
            gone_share: r.share(r.gone),
            gone_at_cutoff: r.gone_at_cutoff,
            gone_at_cutoff_share: r.share(r.gone_at_cutoff),
        }),
    )?;
    write_rows(
        &dir.join(DEVELOPER_BREAKS),
        rep.frequency
            .per_developer
            .iter()
            .map(|d| DeveloperBreakRow {
                org: &d.org,
                developer: &d.developer,
                non_coding: d.non_coding,
                inactive: d.inactive,
                gone: d.gone,
                years_observed: d.years_observed,
                breaks_per_year: opt(d.per_year(d.total())),
            }),
    )?;
    write_rows(
        &dir.join(BREAK_DURATIONS),
        rep.durations.iter().map(|d| DurationOut {
            org: &d.org,
            state: d.state,
            n: d.n,
            mean_days: d.mean,
            median_days: d.median,
            sd_days_population: d.sd,
        }),
    )?;
    write_rows(
        &dir.join(PAIRED_TESTS),
        rep.paired_tests.iter().map(|t| {
            let na = || "N/A".to_string();
            PairedOut {
                org: &t.org,
                n_pairs: t.n_pairs,
                n_nonzero: t
                    .wilcoxon
                    .as_ref()
                    .map(|w| w.n.to_string())
                    .unwrap_or_else(na),
                w_plus: t.w_statistic().map(|w| w.to_string()).unwrap_or_else(na),
                p_raw: t.p_raw().map(|p| p.to_string()).unwrap_or_else(na),
                p_adjusted: t.p_adjusted.map(|p| p.to_string()).unwrap_or_else(na),
                p_method: t
                    .wilcoxon
                    .as_ref()
                    .map(|w| match w.method {
                        crate::analytics::PValueMethod::Exact => "exact".to_string(),
                        crate::analytics::PValueMethod::NormalApprox => "normal_cc".to_string(),
                    })
                    .unwrap_or_else(na),
                cliffs_delta: t.cliffs_delta.map(|d| d.to_string()).unwrap_or_else(na),
                magnitude: t
                    .magnitude
                    .map(|m| m.as_str().to_string())
                    .unwrap_or_else(na),
            }
        }),
    )?;
    write_rows(
        &dir.join(TRANSITION_EDGES),
        rep.matrices.iter().flat_map(|m| {
            m.edges().into_iter().map(move |(from, to, p)| EdgeOut {
                scope: &m.scope,
                from,
                to,
                count: m.counts.get(from, to),
                probability: p,
            })
        }),
    )?;
    write_rows(
        &dir.join(TRANSITION_ROWS),
        rep.matrices.iter().flat_map(|m| {
            State::ALL.into_iter().map(move |s| RowOut {
                scope: &m.scope,
                state: s,
                outgoing: m.counts.0[s.index()].iter().sum(),
                empty: m.empty_rows[s.index()],
            })
        }),
    )?;
    write_rows(
        &dir.join(ODDS_RATIO),
        rep.odds.iter().map(|o| OddsOut {
            n: o.n,
            low_gone: o.table.low_gone,
            low_not_gone: o.table.low_not_gone,
            high_gone: o.table.high_gone,
            high_not_gone: o.table.high_not_gone,
            odds_ratio: o.or_value,
            ci95_low: o.ci_low,
            ci95_high: o.ci_high,
            corrected: o.corrected,
            significant: o.significant(),
            logistic_odds_ratio: opt(o.logistic_or),
        }),
    )
}

pub fn write_sensitivity(dir: &Path, rows: &[SensitivityRow]) -> Result<()> {
    write_rows(&dir.join(SENSITIVITY), rows)
}
