//! End-to-end orchestration and run configuration.
//!
//! Each stage reads the artifacts of the previous one, so the CLI can run
//! them one at a time or all together.

pub mod artifacts;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Months, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    break_durations, break_frequency, gone_odds_ratio, paired_medians, transition_matrix,
    wilcoxon_holm_cliffs, BreakFrequency, ContributionRecord, DurationRow, OddsRatioResult,
    PairedTestResult, SelfLoopMode, TransitionMatrix,
};
use crate::core_dev::{
    by_project, commit_based_core, commit_counts, summarize, truck_factor, CoreDevSet, CoreMethod,
    CoreOverrides, CoreSummaryRow, DEFAULT_CBH_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::ingestion::{
    build_timeline, parse_commit_log, parse_events, CachedCorpus, DocPatterns, IdentityMap,
    LogFormat,
};
use crate::lifecycle::{build_trace, LifecycleConfig, LifecycleTrace, State};
use crate::rhythm::{pauses_from_days, run_detector, Detection, DetectorConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitInput {
    pub repo: String,
    pub path: PathBuf,
    pub format: LogFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub org_id: String,
    pub commits: Vec<CommitInput>,
    pub events: Vec<PathBuf>,
    pub aliases: Option<PathBuf>,
    pub doc_patterns: Option<PathBuf>,
    pub cutoff: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TracePopulation {
    /// Core developers of any project under the selected method.
    #[default]
    Core,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreConfig {
    pub method: CoreMethod,
    pub cbh_threshold: f64,
    pub include_doc_commits: bool,
    pub overrides: Option<PathBuf>,
}

impl Default for CoreConfig {
    fn default() -> Self {
        Self {
            method: CoreMethod::TruckFactor,
            cbh_threshold: DEFAULT_CBH_THRESHOLD,
            include_doc_commits: false,
            overrides: None,
        }
    }
}

/// Everything needed to reproduce a run; written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub ingest: IngestConfig,
    pub detector: DetectorConfig,
    pub lifecycle: LifecycleConfig,
    pub core: CoreConfig,
    pub population: TracePopulation,
    pub self_loop_mode: SelfLoopMode,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        self.lifecycle.validate()?;
        if !(self.core.cbh_threshold > 0.0 && self.core.cbh_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "commit share threshold must be in (0, 1], got {}",
                self.core.cbh_threshold
            )));
        }
        Ok(())
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Parses every input file (in parallel) and builds the timelines.
pub fn ingest(cfg: &IngestConfig) -> Result<(CachedCorpus, Vec<String>)> {
    let docs = match &cfg.doc_patterns {
        Some(p) => DocPatterns::from_file(p)?,
        None => DocPatterns::default(),
    };
    let ids = match &cfg.aliases {
        Some(p) => IdentityMap::from_file(p)?,
        None => IdentityMap::new(),
    };

    let parsed_commits = cfg
        .commits
        .par_iter()
        .map(|input| {
            parse_commit_log(open(&input.path)?, input.format, &input.repo, &docs)
                .map(|p| (input.path.clone(), p))
        })
        .collect::<Result<Vec<_>>>()?;
    let parsed_events = cfg
        .events
        .par_iter()
        .map(|p| parse_events(open(p)?).map(|e| (p.clone(), e)))
        .collect::<Result<Vec<_>>>()?;

    let mut warnings = Vec::new();
    let mut commits = Vec::new();
    for (path, p) in parsed_commits {
        if p.malformed > 0 {
            warnings.push(format!(
                "{}: skipped {} malformed commit records",
                path.display(),
                p.malformed
            ));
        }
        if p.without_paths > 0 {
            warnings.push(format!(
                "{}: {} commits carry no paths",
                path.display(),
                p.without_paths
            ));
        }
        commits.extend(p.commits);
    }
    let mut events = Vec::new();
    for (path, p) in parsed_events {
        if p.malformed > 0 {
            warnings.push(format!(
                "{}: skipped {} malformed events",
                path.display(),
                p.malformed
            ));
        }
        for (kind, n) in &p.unmapped_types {
            warnings.push(format!(
                "{}: {n} events of unknown type {kind:?} treated as passive",
                path.display()
            ));
        }
        events.extend(p.events);
    }
    // input order must not leak into the cache
    commits.sort_by(|a, b| (&a.repo_id, &a.sha).cmp(&(&b.repo_id, &b.sha)));
    commits.dedup_by(|a, b| a.repo_id == b.repo_id && a.sha == b.sha);

    let set = build_timeline(&commits, &events, &ids, &cfg.org_id, cfg.cutoff);
    warnings.extend(set.warnings);
    Ok((
        CachedCorpus {
            org_id: cfg.org_id.clone(),
            observation_end: cfg.cutoff,
            commits,
            timelines: set.timelines,
        },
        warnings,
    ))
}

/// One core member with its commit share in the project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreMember {
    pub project: String,
    pub method: CoreMethod,
    pub developer: String,
    pub commits: usize,
    pub share: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoreSelection {
    pub sets: Vec<CoreDevSet>,
    pub members: Vec<CoreMember>,
    pub summary: Vec<CoreSummaryRow>,
    pub warnings: Vec<String>,
}

impl CoreSelection {
    pub fn developers(&self) -> BTreeSet<String> {
        self.members.iter().map(|m| m.developer.clone()).collect()
    }
}

/// Runs both selection methods on every project, keeping the configured one.
pub fn select_core(
    corpus: &CachedCorpus,
    ids: &IdentityMap,
    cfg: &CoreConfig,
) -> Result<CoreSelection> {
    let overrides = match &cfg.overrides {
        Some(p) => CoreOverrides::from_file(p)?,
        None => CoreOverrides::default(),
    };
    let mut out = CoreSelection::default();
    for (project, commits) in by_project(&corpus.commits) {
        let counts = commit_counts(&commits, ids, cfg.include_doc_commits);
        let total: usize = counts.values().sum();
        let all_devs = commit_counts(&commits, ids, true).len();
        let cbh = match commit_based_core(
            project,
            &commits,
            ids,
            cfg.cbh_threshold,
            cfg.include_doc_commits,
        ) {
            Ok(s) => s,
            Err(Error::EmptyProject(p)) => {
                out.warnings.push(format!("skipped empty project {p}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let tf = match truck_factor(project, &commits, ids) {
            Ok(s) => s,
            Err(Error::EmptyProject(p)) => {
                out.warnings
                    .push(format!("skipped project without code files {p}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let (mut tf, mut cbh) = (tf, cbh);
        overrides.apply(&mut tf);
        overrides.apply(&mut cbh);
        out.summary.push(summarize(project, all_devs, &tf, &cbh));
        let chosen = match cfg.method {
            CoreMethod::TruckFactor => tf,
            CoreMethod::CommitBased => cbh,
        };
        for dev in &chosen.members {
            let n = counts.get(dev).copied().unwrap_or(0);
            out.members.push(CoreMember {
                project: project.to_string(),
                method: chosen.method,
                developer: dev.clone(),
                commits: n,
                share: if total == 0 {
                    0.0
                } else {
                    n as f64 / total as f64
                },
            });
        }
        out.sets.push(chosen);
    }
    Ok(out)
}

/// Runs the break detector for every developer with at least one pause.
pub fn detect_all(
    corpus: &CachedCorpus,
    cfg: &DetectorConfig,
) -> Result<BTreeMap<String, Detection>> {
    cfg.validate()?;
    Ok(corpus
        .timelines
        .par_iter()
        .filter(|(_, tl)| tl.commit_days.len() >= 2)
        .map(|(k, tl)| (k.clone(), run_detector(&tl.commit_days, cfg)))
        .collect())
}

/// Builds lifecycle traces for the detected developers, optionally
/// restricted to `population`.
pub fn trace_all(
    corpus: &CachedCorpus,
    detections: &BTreeMap<String, Detection>,
    cfg: &LifecycleConfig,
    population: Option<&BTreeSet<String>>,
) -> Result<Vec<LifecycleTrace>> {
    detections
        .par_iter()
        .filter(|(k, _)| population.is_none_or(|p| p.contains(*k)))
        .map(|(k, det)| {
            let tl = corpus.timelines.get(k).ok_or_else(|| {
                Error::Consistency(format!("detections for unknown developer {k}"))
            })?;
            build_trace(tl, &det.breaks, det.closing_threshold, cfg)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub frequency: BreakFrequency,
    pub durations: Vec<DurationRow>,
    /// Aggregate matrix first, then one per organization.
    pub matrices: Vec<TransitionMatrix>,
    pub paired_tests: Vec<PairedTestResult>,
    pub odds: Option<OddsRatioResult>,
    pub warnings: Vec<String>,
}

pub fn report(
    traces: &[LifecycleTrace],
    core_members: &[CoreMember],
    mode: SelfLoopMode,
) -> Result<Report> {
    let mut matrices = vec![transition_matrix(traces, "aggregate", mode)];
    let orgs: BTreeSet<&str> = traces.iter().map(|t| t.org_id.as_str()).collect();
    for org in orgs {
        matrices.push(transition_matrix(traces, org, mode));
    }

    let mut warnings = Vec::new();
    let gone: BTreeMap<&str, bool> = traces
        .iter()
        .map(|t| (t.developer_key.as_str(), t.ever_in(State::Gone)))
        .collect();
    let records: Vec<ContributionRecord> = core_members
        .iter()
        .filter_map(|m| {
            gone.get(m.developer.as_str()).map(|g| ContributionRecord {
                project: m.project.clone(),
                developer: m.developer.clone(),
                share: m.share,
                ever_gone: *g,
            })
        })
        .collect();
    let odds = if records.is_empty() {
        None
    } else {
        match gone_odds_ratio(&records) {
            Ok(r) => Some(r),
            Err(Error::Config(msg)) => {
                warnings.push(format!("odds ratio skipped: {msg}"));
                None
            }
            Err(e) => return Err(e),
        }
    };

    Ok(Report {
        frequency: break_frequency(traces),
        durations: break_durations(traces),
        matrices,
        paired_tests: wilcoxon_holm_cliffs(&paired_medians(traces)),
        odds,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub window_months: u32,
    pub developers: usize,
    pub breaks: usize,
    pub pauses_longer_than_window: usize,
    pub devs_history_shorter_than_window: usize,
}

/// Break counts and window-fit diagnostics for each candidate window size.
pub fn sensitivity(
    corpus: &CachedCorpus,
    windows: &[u32],
    shift_days: u32,
) -> Result<Vec<SensitivityRow>> {
    let devs: Vec<_> = corpus
        .timelines
        .values()
        .filter(|t| t.commit_days.len() >= 2)
        .collect();
    windows
        .iter()
        .map(|&months| {
            let cfg = DetectorConfig {
                window_months: months,
                shift_days,
            };
            cfg.validate()?;
            let mut row = SensitivityRow {
                window_months: months,
                developers: devs.len(),
                breaks: 0,
                pauses_longer_than_window: 0,
                devs_history_shorter_than_window: 0,
            };
            let per_dev: Vec<(usize, usize, bool)> = devs
                .par_iter()
                .map(|tl| {
                    let breaks = run_detector(&tl.commit_days, &cfg).breaks.len();
                    let longer = pauses_from_days(&tl.commit_days)
                        .iter()
                        .filter(|p| p.end > p.start + Months::new(months))
                        .count();
                    let first = tl.commit_days[0];
                    let last = *tl.commit_days.last().unwrap();
                    (breaks, longer, last < first + Months::new(months))
                })
                .collect();
            for (b, l, short) in per_dev {
                row.breaks += b;
                row.pauses_longer_than_window += l;
                row.devs_history_shorter_than_window += short as usize;
            }
            Ok(row)
        })
        .collect()
}

/// Runs every stage and writes all artifacts into `cfg.output_dir`.
pub fn run_all(cfg: &RunConfig) -> Result<Vec<String>> {
    cfg.validate()?;
    let (corpus, mut warnings) = ingest(&cfg.ingest)?;
    let ids = match &cfg.ingest.aliases {
        Some(p) => IdentityMap::from_file(p)?,
        None => IdentityMap::new(),
    };
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    crate::ingestion::cache_store(&out.join("cache"), &corpus)?;

    let core = select_core(&corpus, &ids, &cfg.core)?;
    warnings.extend(core.warnings.iter().cloned());
    artifacts::write_core(out, &core)?;

    let detections = detect_all(&corpus, &cfg.detector)?;
    artifacts::write_detections(out, &detections)?;

    let population = match cfg.population {
        TracePopulation::Core => Some(core.developers()),
        TracePopulation::All => None,
    };
    let traces = trace_all(&corpus, &detections, &cfg.lifecycle, population.as_ref())?;
    artifacts::write_traces(out, &traces)?;

    let rep = report(&traces, &core.members, cfg.self_loop_mode)?;
    warnings.extend(rep.warnings.iter().cloned());
    artifacts::write_report(out, &rep)?;

    artifacts::write_json(&out.join("run_config.json"), cfg)?;
    Ok(warnings)
}
