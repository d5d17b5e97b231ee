//! `devbreaks` command line.
//!
//! Exit codes: 0 success, 2 input or format failure, 3 internal
//! consistency violation.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use devbreaks_core::analytics::SelfLoopMode;
use devbreaks_core::core_dev::CoreMethod;
use devbreaks_core::ingestion::{cache_load, cache_store, IdentityMap, LogFormat};
use devbreaks_core::lifecycle::LifecycleConfig;
use devbreaks_core::pipeline::{
    self, artifacts, CommitInput, CoreConfig, IngestConfig, RunConfig, TracePopulation,
};
use devbreaks_core::rhythm::DetectorConfig;
use devbreaks_core::Error;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "devbreaks",
    version,
    about = "Detect developer breaks and lifecycle transitions in repository histories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse commit logs and event exports into a timeline cache.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        cache: PathBuf,
    },
    /// Select core developers per project.
    Core {
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        aliases: Option<PathBuf>,
        #[command(flatten)]
        core: CoreArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detect breaks for every developer in the cache.
    Breaks {
        #[arg(long)]
        cache: PathBuf,
        #[command(flatten)]
        detector: DetectorArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label breaks and build lifecycle traces.
    Lifecycle {
        #[arg(long)]
        cache: PathBuf,
        /// Directory holding breaks.csv and detector_summary.csv.
        #[arg(long)]
        breaks: PathBuf,
        #[arg(long, default_value_t = 365)]
        gone_days: u32,
        /// core_members.csv restricting the traced developers.
        #[arg(long)]
        core: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate traces into frequency, duration, transition, test and odds tables.
    Report {
        /// Directories holding trace CSVs; repeat for several organizations.
        #[arg(long = "traces", required = true)]
        traces: Vec<PathBuf>,
        /// core_members.csv files supplying contribution shares for the odds ratio.
        #[arg(long = "core")]
        core: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = LoopMode::Pauses)]
        self_loop_mode: LoopMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare break counts across window sizes.
    Sensitivity {
        #[arg(long)]
        cache: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u32, 3, 4, 6, 12])]
        windows: Vec<u32>,
        #[arg(long, default_value_t = 7)]
        shift_days: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage end to end.
    Run {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        core: CoreArgs,
        #[command(flatten)]
        detector: DetectorArgs,
        #[arg(long, default_value_t = 365)]
        gone_days: u32,
        #[arg(long, value_enum, default_value_t = LoopMode::Pauses)]
        self_loop_mode: LoopMode,
        /// Trace every developer with two or more commit days, not only core ones.
        #[arg(long)]
        all_developers: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    org: String,
    /// `<repo>=<path>` of a name-status git log; repeatable.
    #[arg(long = "git-log")]
    git_log: Vec<String>,
    /// Newline-delimited JSON commit export; repeatable.
    #[arg(long = "commits-ndjson")]
    commits_ndjson: Vec<PathBuf>,
    /// Newline-delimited JSON forge events; repeatable.
    #[arg(long = "events")]
    events: Vec<PathBuf>,
    #[arg(long)]
    aliases: Option<PathBuf>,
    #[arg(long)]
    doc_patterns: Option<PathBuf>,
    /// Data-collection cutoff, a date (end of day UTC) or RFC 3339 timestamp.
    #[arg(long)]
    cutoff: String,
}

#[derive(Args)]
struct CoreArgs {
    #[arg(long, value_enum, default_value_t = Method::Tf)]
    core_method: Method,
    #[arg(long, default_value_t = 0.8)]
    cbh_threshold: f64,
    /// Count doc-only commits in the commit-based heuristic.
    #[arg(long)]
    include_doc_commits: bool,
    /// CSV `project,developer,action` of manual corrections.
    #[arg(long)]
    core_overrides: Option<PathBuf>,
}

#[derive(Args)]
struct DetectorArgs {
    #[arg(long, default_value_t = 3)]
    window_months: u32,
    #[arg(long, default_value_t = 7)]
    shift_days: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Tf,
    Cbh,
}

#[derive(Clone, Copy, ValueEnum)]
enum LoopMode {
    Pauses,
    Boundaries,
}

impl From<LoopMode> for SelfLoopMode {
    fn from(m: LoopMode) -> Self {
        match m {
            LoopMode::Pauses => SelfLoopMode::Pauses,
            LoopMode::Boundaries => SelfLoopMode::Boundaries,
        }
    }
}

impl CoreArgs {
    fn config(&self) -> CoreConfig {
        CoreConfig {
            method: match self.core_method {
                Method::Tf => CoreMethod::TruckFactor,
                Method::Cbh => CoreMethod::CommitBased,
            },
            cbh_threshold: self.cbh_threshold,
            include_doc_commits: self.include_doc_commits,
            overrides: self.core_overrides.clone(),
        }
    }
}

impl DetectorArgs {
    fn config(&self) -> DetectorConfig {
        DetectorConfig {
            window_months: self.window_months,
            shift_days: self.shift_days,
        }
    }
}

fn parse_cutoff(s: &str) -> Result<DateTime<Utc>, Error> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(23, 59, 59))
        .map(|t| t.and_utc())
        .ok_or_else(|| Error::Config(format!("bad cutoff {s:?}, expected YYYY-MM-DD or RFC 3339")))
}

impl InputArgs {
    fn config(&self) -> Result<IngestConfig, Error> {
        let mut commits = Vec::new();
        for spec in &self.git_log {
            let (repo, path) = spec.split_once('=').ok_or_else(|| {
                Error::Config(format!("--git-log expects <repo>=<path>, got {spec:?}"))
            })?;
            commits.push(CommitInput {
                repo: repo.to_string(),
                path: PathBuf::from(path),
                format: LogFormat::GitLog,
            });
        }
        for path in &self.commits_ndjson {
            commits.push(CommitInput {
                repo: String::new(),
                path: path.clone(),
                format: LogFormat::Ndjson,
            });
        }
        if commits.is_empty() {
            return Err(Error::Config("no commit input given".into()));
        }
        Ok(IngestConfig {
            org_id: self.org.clone(),
            commits,
            events: self.events.clone(),
            aliases: self.aliases.clone(),
            doc_patterns: self.doc_patterns.clone(),
            cutoff: parse_cutoff(&self.cutoff)?,
        })
    }
}

fn mkdir(p: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn load_aliases(p: &Option<PathBuf>) -> Result<IdentityMap, Error> {
    match p {
        Some(p) => IdentityMap::from_file(p),
        None => Ok(IdentityMap::new()),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest { input, cache } => {
            let cfg = input.config()?;
            let (corpus, warnings) = pipeline::ingest(&cfg)?;
            warn_all(&warnings);
            mkdir(&cache)?;
            cache_store(&cache, &corpus)?;
            artifacts::write_json(&cache.join("ingest_config.json"), &cfg)?;
            eprintln!(
                "ingested {} commits, {} developers",
                corpus.commits.len(),
                corpus.timelines.len()
            );
        }
        Command::Core {
            cache,
            aliases,
            core,
            out,
        } => {
            let corpus = cache_load(&cache)?;
            let cfg = core.config();
            let sel = pipeline::select_core(&corpus, &load_aliases(&aliases)?, &cfg)?;
            warn_all(&sel.warnings);
            mkdir(&out)?;
            artifacts::write_core(&out, &sel)?;
            artifacts::write_json(&out.join("core_config.json"), &cfg)?;
        }
        Command::Breaks {
            cache,
            detector,
            out,
        } => {
            let corpus = cache_load(&cache)?;
            let cfg = detector.config();
            let det = pipeline::detect_all(&corpus, &cfg)?;
            mkdir(&out)?;
            artifacts::write_detections(&out, &det)?;
            artifacts::write_json(&out.join("detector_config.json"), &cfg)?;
        }
        Command::Lifecycle {
            cache,
            breaks,
            gone_days,
            core,
            out,
        } => {
            let corpus = cache_load(&cache)?;
            let det = artifacts::read_detections(&breaks)?;
            let cfg = LifecycleConfig { gone_days };
            let population: Option<BTreeSet<String>> = match &core {
                Some(p) => Some(
                    artifacts::read_core_members(p)?
                        .into_iter()
                        .map(|m| m.developer)
                        .collect(),
                ),
                None => None,
            };
            let traces = pipeline::trace_all(&corpus, &det, &cfg, population.as_ref())?;
            mkdir(&out)?;
            artifacts::write_traces(&out, &traces)?;
            artifacts::write_json(
                &out.join("lifecycle_config.json"),
                &json!({ "lifecycle": cfg, "core_filter": core }),
            )?;
        }
        Command::Report {
            traces,
            core,
            self_loop_mode,
            out,
        } => {
            let mut all = Vec::new();
            for dir in &traces {
                all.extend(artifacts::read_traces(dir)?);
            }
            let mut members = Vec::new();
            for p in &core {
                members.extend(artifacts::read_core_members(p)?);
            }
            let mode: SelfLoopMode = self_loop_mode.into();
            let rep = pipeline::report(&all, &members, mode)?;
            warn_all(&rep.warnings);
            mkdir(&out)?;
            artifacts::write_report(&out, &rep)?;
            artifacts::write_json(
                &out.join("report_config.json"),
                &json!({ "traces": traces, "core": core, "self_loop_mode": mode }),
            )?;
        }
        Command::Sensitivity {
            cache,
            windows,
            shift_days,
            out,
        } => {
            let corpus = cache_load(&cache)?;
            let rows = pipeline::sensitivity(&corpus, &windows, shift_days)?;
            mkdir(&out)?;
            artifacts::write_sensitivity(&out, &rows)?;
        }
        Command::Run {
            input,
            core,
            detector,
            gone_days,
            self_loop_mode,
            all_developers,
            out,
        } => {
            let cfg = RunConfig {
                ingest: input.config()?,
                detector: detector.config(),
                lifecycle: LifecycleConfig { gone_days },
                core: core.config(),
                population: if all_developers {
                    TracePopulation::All
                } else {
                    TracePopulation::Core
                },
                self_loop_mode: self_loop_mode.into(),
                output_dir: out,
            };
            let warnings = pipeline::run_all(&cfg)?;
            warn_all(&warnings);
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Consistency(_)) => 3,
        Some(e) if e.is_input_error() => 2,
        Some(_) => 3,
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
