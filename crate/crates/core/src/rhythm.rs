//! Per-developer contribution rhythm and break identification.
//!
//! A pause is the whole-day gap between two consecutive commit days. A
//! window of `window_months` calendar months starts at the first commit day
//! and slides forward by `shift_days` until it reaches the last commit day.
//! Each window with at least four fully contained pauses gets a far-out
//! threshold `Q3 + 3·IQR` (quartiles as Tukey hinges); the threshold is
//! only valid when `IQR > 1`.
//!
//! Per window:
//!
//! * valid threshold: every contained or partially included pause (starts
//!   inside, ends after) longer than the threshold is a break;
//! * otherwise the previous window's threshold is reused when it was valid;
//! * otherwise the window is skipped, and partially included pauses longer
//!   than the window itself are set aside. After the sweep they are judged
//!   against the mean of all valid thresholds (or the window length when no
//!   valid threshold was ever seen).
//!
//! The same pause can fire in several overlapping windows; it is reported
//! once, with the first window that flagged it.

use std::collections::HashSet;

use chrono::{Duration, Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::DeveloperTimeline;

pub const ACCEPTED_WINDOW_MONTHS: [u32; 5] = [1, 3, 4, 6, 12];
pub const MIN_PAUSES_PER_WINDOW: usize = 4;
pub const IQR_FLOOR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pause {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub length_days: i64,
}

impl Pause {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        Self {
            start,
            end,
            length_days: (end - start).num_days(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Window {
    fn starting_at(start: NaiveDate, months: u32) -> Self {
        Self {
            start,
            end: start + Months::new(months),
        }
    }

    pub fn length_days(&self) -> i64 {
        (self.end - self.start).num_days()
    }

    pub fn contains(&self, p: &Pause) -> bool {
        p.start >= self.start && p.end <= self.end
    }

    /// Starts inside the window and ends after it.
    pub fn partially_includes(&self, p: &Pause) -> bool {
        p.start >= self.start && p.start <= self.end && p.end > self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub window_months: u32,
    pub shift_days: u32,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window_months: 3,
            shift_days: 7,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !ACCEPTED_WINDOW_MONTHS.contains(&self.window_months) {
            return Err(Error::Config(format!(
                "window size must be one of {ACCEPTED_WINDOW_MONTHS:?} months, got {}",
                self.window_months
            )));
        }
        if self.shift_days == 0 {
            return Err(Error::Config(
                "window shift must be at least one day".into(),
            ));
        }
        Ok(())
    }
}

/// Far-out-value threshold of one window's pause distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarOutThreshold {
    pub n: usize,
    pub q1: f64,
    pub q3: f64,
    pub t_fov: f64,
    pub valid: bool,
}

impl FarOutThreshold {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

fn median_sorted(v: &[i64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

/// Tukey hinges `(lower, upper)`: medians of the lower and upper halves,
/// the median itself belonging to both halves when `n` is odd.
pub fn tukey_hinges(sorted: &[i64]) -> Option<(f64, f64)> {
    let n = sorted.len();
    if n == 0 {
        return None;
    }
    let half = n.div_ceil(2);
    Some((
        median_sorted(&sorted[..half]),
        median_sorted(&sorted[n - half..]),
    ))
}

pub fn far_out_threshold(pauses: &[i64]) -> FarOutThreshold {
    let mut sorted = pauses.to_vec();
    sorted.sort_unstable();
    let Some((q1, q3)) = tukey_hinges(&sorted) else {
        return FarOutThreshold {
            n: 0,
            q1: 0.0,
            q3: 0.0,
            t_fov: 0.0,
            valid: false,
        };
    };
    let iqr = q3 - q1;
    FarOutThreshold {
        n: sorted.len(),
        q1,
        q3,
        t_fov: q3 + 3.0 * iqr,
        valid: sorted.len() >= MIN_PAUSES_PER_WINDOW && iqr > IQR_FLOOR,
    }
}

/// Pauses between consecutive commit days, in start order. Fewer than two
/// commit days yields no pauses.
pub fn extract_pauses(timeline: &DeveloperTimeline) -> Vec<Pause> {
    pauses_from_days(&timeline.commit_days)
}

pub fn pauses_from_days(days: &[NaiveDate]) -> Vec<Pause> {
    days.windows(2).map(|w| Pause::new(w[0], w[1])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakSource {
    /// Exceeded a window threshold (computed or carried over).
    WindowThreshold,
    /// Set aside as longer than a window with no usable threshold.
    LongerThanWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedBreak {
    pub pause: Pause,
    pub window: Window,
    pub threshold: f64,
    pub source: BreakSource,
}

impl DetectedBreak {
    pub fn start(&self) -> NaiveDate {
        self.pause.start
    }

    pub fn end(&self) -> NaiveDate {
        self.pause.end
    }

    pub fn is_well_formed(&self) -> bool {
        self.pause.length_days as f64 > self.threshold
            || self.pause.length_days > self.window.length_days()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowStatus {
    Computed,
    CarriedOver,
    Skipped,
}

/// What happened in one window of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub index: usize,
    pub window: Window,
    pub contained_pauses: usize,
    pub computed: Option<FarOutThreshold>,
    pub status: WindowStatus,
    /// Threshold applied to this window's pauses, if any.
    pub applied: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Detection {
    pub breaks: Vec<DetectedBreak>,
    pub windows: Vec<WindowRecord>,
    /// Mean over all valid thresholds recorded during the sweep.
    pub mean_valid_threshold: Option<f64>,
    /// Threshold for judging silence after the last commit day: the last
    /// applied threshold, else the mean valid one, else the last window's
    /// length.
    pub closing_threshold: Option<f64>,
}

pub fn detect_breaks(timeline: &DeveloperTimeline, cfg: &DetectorConfig) -> Vec<DetectedBreak> {
    run_detector(&timeline.commit_days, cfg).breaks
}

/// Runs the sliding-window sweep over a developer's commit days.
pub fn run_detector(commit_days: &[NaiveDate], cfg: &DetectorConfig) -> Detection {
    let pauses = pauses_from_days(commit_days);
    let (Some(&first), Some(&last)) = (commit_days.first(), commit_days.last()) else {
        return Detection::default();
    };
    if pauses.is_empty() {
        return Detection::default();
    }

    // (window index, threshold, valid)
    let mut thresholds: Vec<(usize, f64, bool)> = Vec::new();
    let mut longer: Vec<(Pause, Window)> = Vec::new();
    let mut candidates: Vec<DetectedBreak> = Vec::new();
    let mut windows = Vec::new();

    let mut w = Window::starting_at(first, cfg.window_months);
    let mut i = 0usize;
    // pauses are sorted by start, so the scan start only moves forward
    let mut lo = 0usize;
    loop {
        while lo < pauses.len() && pauses[lo].start < w.start {
            lo += 1;
        }
        let mut contained = Vec::new();
        let mut partial = Vec::new();
        for p in pauses[lo..].iter().take_while(|p| p.start <= w.end) {
            if w.contains(p) {
                contained.push(*p);
            } else if w.partially_includes(p) {
                partial.push(*p);
            }
        }

        let mut record = WindowRecord {
            index: i,
            window: w,
            contained_pauses: contained.len(),
            computed: None,
            status: WindowStatus::Computed,
            applied: None,
        };

        let mut applied = None;
        if contained.len() >= MIN_PAUSES_PER_WINDOW {
            let lengths: Vec<i64> = contained.iter().map(|p| p.length_days).collect();
            let fo = far_out_threshold(&lengths);
            thresholds.push((i, fo.t_fov, fo.valid));
            record.computed = Some(fo);
            if fo.valid {
                applied = Some(fo.t_fov);
            }
        }
        if applied.is_none() {
            let prev = i
                .checked_sub(1)
                .and_then(|j| thresholds.iter().rev().find(|(k, _, _)| *k == j))
                .copied();
            match prev {
                Some((_, t, true)) => {
                    thresholds.push((i, t, true));
                    applied = Some(t);
                    record.status = WindowStatus::CarriedOver;
                }
                _ => {
                    record.status = WindowStatus::Skipped;
                    let size = w.length_days();
                    longer.extend(
                        partial
                            .iter()
                            .filter(|p| p.length_days > size)
                            .map(|p| (*p, w)),
                    );
                }
            }
        }

        if let Some(t) = applied {
            record.applied = Some(t);
            for p in contained.iter().chain(&partial) {
                if p.length_days as f64 > t {
                    candidates.push(DetectedBreak {
                        pause: *p,
                        window: w,
                        threshold: t,
                        source: BreakSource::WindowThreshold,
                    });
                }
            }
        }
        windows.push(record);

        if w.end >= last {
            break;
        }
        i += 1;
        w = Window::starting_at(
            w.start + Duration::days(cfg.shift_days as i64),
            cfg.window_months,
        );
    }

    let valid: Vec<f64> = thresholds.iter().filter(|t| t.2).map(|t| t.1).collect();
    let mean_valid_threshold = if valid.is_empty() {
        None
    } else {
        Some(valid.iter().sum::<f64>() / valid.len() as f64)
    };
    for (p, win) in longer {
        candidates.push(DetectedBreak {
            pause: p,
            window: win,
            threshold: mean_valid_threshold.unwrap_or(win.length_days() as f64),
            source: BreakSource::LongerThanWindow,
        });
    }

    let mut seen = HashSet::new();
    let mut breaks: Vec<DetectedBreak> = candidates
        .into_iter()
        .filter(|b| seen.insert((b.pause.start, b.pause.end)))
        .collect();
    breaks.sort_by_key(|b| b.pause.start);

    let closing_threshold = windows
        .iter()
        .rev()
        .find_map(|r| r.applied)
        .or(mean_valid_threshold)
        .or_else(|| windows.last().map(|r| r.window.length_days() as f64));

    Detection {
        breaks,
        windows,
        mean_valid_threshold,
        closing_threshold,
    }
}
