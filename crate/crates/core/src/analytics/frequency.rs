use std::collections::BTreeMap;

use serde::Serialize;

use crate::lifecycle::{LifecycleTrace, State};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrgFrequency {
    pub org: String,
    pub developers: usize,
    pub non_coding: usize,
    pub inactive: usize,
    pub gone: usize,
    pub gone_at_cutoff: usize,
}

impl OrgFrequency {
    pub fn share(&self, count: usize) -> f64 {
        if self.developers == 0 {
            0.0
        } else {
            count as f64 / self.developers as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeveloperBreakCounts {
    pub org: String,
    pub developer: String,
    pub non_coding: usize,
    pub inactive: usize,
    pub gone: usize,
    pub years_observed: f64,
}

impl DeveloperBreakCounts {
    pub fn total(&self) -> usize {
        self.non_coding + self.inactive + self.gone
    }

    /// Breaks per year of presence, `None` for histories under one day.
    pub fn per_year(&self, count: usize) -> Option<f64> {
        (self.years_observed > 0.0).then(|| count as f64 / self.years_observed)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BreakFrequency {
    pub per_org: Vec<OrgFrequency>,
    pub per_developer: Vec<DeveloperBreakCounts>,
}

/// How many developers per organization ever entered each break state.
pub fn break_frequency(traces: &[LifecycleTrace]) -> BreakFrequency {
    let mut orgs: BTreeMap<&str, OrgFrequency> = BTreeMap::new();
    let mut per_developer = Vec::with_capacity(traces.len());
    for t in traces {
        let row = orgs
            .entry(t.org_id.as_str())
            .or_insert_with(|| OrgFrequency {
                org: t.org_id.clone(),
                developers: 0,
                non_coding: 0,
                inactive: 0,
                gone: 0,
                gone_at_cutoff: 0,
            });
        row.developers += 1;
        row.non_coding += t.ever_in(State::ActiveNonCoding) as usize;
        row.inactive += t.ever_in(State::Inactive) as usize;
        row.gone += t.ever_in(State::Gone) as usize;
        row.gone_at_cutoff += t.gone_at_cutoff() as usize;
        per_developer.push(DeveloperBreakCounts {
            org: t.org_id.clone(),
            developer: t.developer_key.clone(),
            non_coding: t.count_in(State::ActiveNonCoding),
            inactive: t.count_in(State::Inactive),
            gone: t.count_in(State::Gone),
            years_observed: t.years_observed(),
        });
    }
    per_developer.sort_by(|a, b| (&a.org, &a.developer).cmp(&(&b.org, &b.developer)));
    BreakFrequency {
        per_org: orgs.into_values().collect(),
        per_developer,
    }
}

/// Summary of break lengths; SD is the population SD.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DurationRow {
    pub org: String,
    pub state: State,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

pub(crate) fn completed_lengths(
    t: &LifecycleTrace,
    state: State,
) -> impl Iterator<Item = f64> + '_ {
    t.segments
        .iter()
        .filter(move |s| s.state == state && !s.ongoing)
        .map(|s| s.length_days() as f64)
}

/// Non-coding and inactive break lengths per organization. Gone and
/// right-censored segments are left out; states without any completed
/// segment produce no row.
pub fn break_durations(traces: &[LifecycleTrace]) -> Vec<DurationRow> {
    let mut samples: BTreeMap<(&str, State), Vec<f64>> = BTreeMap::new();
    for t in traces {
        for state in [State::ActiveNonCoding, State::Inactive] {
            let v: Vec<f64> = completed_lengths(t, state).collect();
            if !v.is_empty() {
                samples
                    .entry((t.org_id.as_str(), state))
                    .or_default()
                    .extend(v);
            }
        }
    }
    samples
        .into_iter()
        .map(|((org, state), mut v)| {
            let n = v.len();
            let mean = v.iter().sum::<f64>() / n as f64;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            DurationRow {
                org: org.to_string(),
                state,
                n,
                mean,
                median: median(&mut v),
                sd: var.sqrt(),
            }
        })
        .collect()
}
