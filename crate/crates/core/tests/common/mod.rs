#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use devbreaks_core::ingestion::{ActivityEvent, ActivityKind, LogFormat};
use devbreaks_core::pipeline::{CommitInput, IngestConfig};
use devbreaks_core::DeveloperTimeline;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn plus(base: NaiveDate, n: i64) -> NaiveDate {
    base + Duration::days(n)
}

pub fn days(base: NaiveDate, offsets: &[i64]) -> Vec<NaiveDate> {
    offsets.iter().map(|n| plus(base, *n)).collect()
}

pub fn noon(d: NaiveDate) -> DateTime<Utc> {
    Utc.from_utc_datetime(&d.and_hms_opt(12, 0, 0).unwrap())
}

pub fn end_of(d: NaiveDate) -> DateTime<Utc> {
    Utc.from_utc_datetime(&d.and_hms_opt(23, 59, 59).unwrap())
}

/// A timeline with commits on `commit_days` and one non-commit event on each
/// of `other_days`.
pub fn timeline(
    key: &str,
    commit_days: &[NaiveDate],
    other_days: &[NaiveDate],
    end: NaiveDate,
) -> DeveloperTimeline {
    let mut cd = commit_days.to_vec();
    cd.sort();
    cd.dedup();
    let mut events: Vec<ActivityEvent> = cd
        .iter()
        .map(|d| ActivityEvent {
            at: noon(*d),
            kind: ActivityKind::Commit,
            repo_id: "r".into(),
        })
        .chain(other_days.iter().map(|d| ActivityEvent {
            at: noon(*d) + Duration::hours(1),
            kind: ActivityKind::IssueComment,
            repo_id: "r".into(),
        }))
        .collect();
    events.sort();
    DeveloperTimeline {
        developer_key: key.into(),
        org_id: "org".into(),
        commit_days: cd,
        activity_events: events,
        observation_end: end_of(end),
    }
}

/// Active span `(first, last)` and silent stretches, in day offsets.
type Span = (i64, i64, Vec<(i64, i64)>);

pub struct SyntheticCorpus {
    pub config: IngestConfig,
    pub commits: usize,
    pub events: usize,
}

/// Writes a seeded multi-repository corpus into `dir`: commit logs in
/// `git_log` format, one per repository, plus one event stream.
pub fn synthetic_corpus(
    dir: &Path,
    seed: u64,
    developers: usize,
    repos: usize,
    commits: usize,
    events: usize,
) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap();
    let span_days = 5 * 365;
    let cutoff = start + Duration::days(span_days + 30);

    // each developer gets an active span and a few silent stretches
    let spans: Vec<Span> = (0..developers)
        .map(|_| {
            let a = rng.gen_range(0..span_days / 2);
            let b = rng.gen_range(a + 200..=span_days);
            let gaps = (0..rng.gen_range(0..4))
                .map(|_| {
                    let s = rng.gen_range(a..b);
                    (s, s + rng.gen_range(30..500))
                })
                .collect();
            (a, b, gaps)
        })
        .collect();
    let weights: Vec<f64> = (0..developers)
        .map(|i| 1.0 / (1.0 + i as f64).powf(0.8))
        .collect();
    let total_w: f64 = weights.iter().sum();
    let pick_dev = |rng: &mut ChaCha8Rng| {
        let mut x = rng.gen::<f64>() * total_w;
        for (i, w) in weights.iter().enumerate() {
            x -= w;
            if x <= 0.0 {
                return i;
            }
        }
        developers - 1
    };
    let pick_day = |rng: &mut ChaCha8Rng, dev: usize| loop {
        let (a, b, gaps) = &spans[dev];
        let d = rng.gen_range(*a..=*b);
        if !gaps.iter().any(|(s, e)| d > *s && d < *e) {
            return d;
        }
    };

    let mut logs: Vec<String> = vec![String::new(); repos];
    for n in 0..commits {
        let dev = pick_dev(&mut rng);
        let repo = rng.gen_range(0..repos);
        let at = start
            + Duration::days(pick_day(&mut rng, dev))
            + Duration::seconds(rng.gen_range(0..86_400));
        let log = &mut logs[repo];
        writeln!(log, "@@@").unwrap();
        writeln!(
            log,
            "{:040x}|Dev {dev}|dev{dev}@example.org|{}",
            (seed << 32) ^ n as u64,
            at.to_rfc3339()
        )
        .unwrap();
        for _ in 0..rng.gen_range(1..4) {
            let path = if rng.gen_bool(0.1) {
                format!("docs/page{}.md", rng.gen_range(0..20))
            } else {
                format!(
                    "src/mod{}/file{}.rs",
                    rng.gen_range(0..10),
                    rng.gen_range(0..40)
                )
            };
            writeln!(log, "M\t{path}").unwrap();
        }
    }

    let kinds = [
        "IssueCommentEvent",
        "PullRequestEvent:opened",
        "PullRequestReviewEvent",
        "IssuesEvent:opened",
        "IssuesEvent:closed",
        "mentioned",
        "WatchEvent",
    ];
    let mut stream = String::new();
    for _ in 0..events {
        let dev = pick_dev(&mut rng);
        let (a, b, _) = &spans[dev];
        let d = rng.gen_range(*a..=(*b + 60).min(span_days));
        let at = start + Duration::days(d) + Duration::seconds(rng.gen_range(0..86_400));
        writeln!(
            stream,
            r#"{{"repo":"repo{}","actor":"dev{dev}@example.org","created_at":"{}","type":"{}"}}"#,
            rng.gen_range(0..repos),
            at.to_rfc3339(),
            kinds[rng.gen_range(0..kinds.len())]
        )
        .unwrap();
    }

    let mut inputs = Vec::new();
    for (r, log) in logs.iter().enumerate() {
        let path = dir.join(format!("repo{r}.log"));
        std::fs::write(&path, log).unwrap();
        inputs.push(CommitInput {
            repo: format!("repo{r}"),
            path,
            format: LogFormat::GitLog,
        });
    }
    let events_path: PathBuf = dir.join("events.ndjson");
    std::fs::write(&events_path, stream).unwrap();
    SyntheticCorpus {
        config: IngestConfig {
            org_id: "synthetic".into(),
            commits: inputs,
            events: vec![events_path],
            aliases: None,
            doc_patterns: None,
            cutoff,
        },
        commits,
        events,
    }
}
