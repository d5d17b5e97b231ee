mod common;

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use common::{plus, timeline, ymd};
use devbreaks_core::analytics::{
    cliffs_delta, holm_adjust, transition_matrix, wilcoxon_signed_rank, SelfLoopMode,
};
use devbreaks_core::core_dev::{commit_based_from_counts, truck_factor};
use devbreaks_core::ingestion::{
    build_timeline, ActivityKind, CollaborationEvent, CommitRecord, EventKind, FileChange,
    IdentityMap,
};
use devbreaks_core::lifecycle::{build_trace, LifecycleConfig};
use devbreaks_core::rhythm::{pauses_from_days, run_detector};
use devbreaks_core::{DetectorConfig, LifecycleTrace, State};
use proptest::prelude::*;

/// Days in 400 Gregorian years; shifting by it preserves weekdays and
/// calendar month lengths.
const GREGORIAN_CYCLE: i64 = 146_097;

fn base() -> NaiveDate {
    ymd(2016, 1, 1)
}

fn commit_offsets() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(
        prop_oneof![6 => 1i64..10, 2 => 10i64..60, 1 => 60i64..600],
        1..40,
    )
    .prop_map(|gaps| {
        let mut t = 0;
        let mut out = vec![0];
        for g in gaps {
            t += g;
            out.push(t);
        }
        out
    })
}

fn detector_config() -> impl Strategy<Value = DetectorConfig> {
    (prop::sample::select(vec![1u32, 3, 4, 6, 12]), 1u32..31).prop_map(
        |(window_months, shift_days)| DetectorConfig {
            window_months,
            shift_days,
        },
    )
}

/// Commit offsets, non-commit event offsets and a cutoff offset.
fn trace_inputs() -> impl Strategy<Value = (Vec<i64>, Vec<i64>, i64)> {
    commit_offsets().prop_flat_map(|commits| {
        let last = *commits.last().unwrap();
        (
            Just(commits),
            prop::collection::btree_set(0..=last + 800, 0..30)
                .prop_map(|s| s.into_iter().collect()),
            last..=last + 800,
        )
    })
}

fn offsets_to_days(offsets: &[i64]) -> Vec<NaiveDate> {
    offsets.iter().map(|n| plus(base(), *n)).collect()
}

fn trace_of(commits: &[i64], others: &[i64], end: i64, lc: &LifecycleConfig) -> LifecycleTrace {
    let others: Vec<i64> = others.iter().copied().filter(|d| *d <= end).collect();
    let tl = timeline(
        "dev",
        &offsets_to_days(commits),
        &offsets_to_days(&others),
        plus(base(), end),
    );
    let det = run_detector(&tl.commit_days, &DetectorConfig::default());
    build_trace(&tl, &det.breaks, det.closing_threshold, lc).unwrap()
}

fn days_in(trace: &LifecycleTrace, state: State) -> i64 {
    trace
        .segments
        .iter()
        .filter(|s| s.state == state)
        .map(|s| s.length_days())
        .sum()
}

// ---------------------------------------------------------------------------
// ingestion

fn at(minutes: i64) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap() + Duration::minutes(minutes)
}

fn raw_commits() -> impl Strategy<Value = Vec<CommitRecord>> {
    prop::collection::vec((0usize..4, 0usize..3, 0i64..200_000), 0..40).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(sha, (dev, repo, minute))| CommitRecord {
                repo_id: format!("r{repo}"),
                sha: format!("{sha:06x}"),
                author_name: format!("Dev {dev}"),
                author_email: format!("dev{dev}@x"),
                authored_at: at(minute),
                files: vec![FileChange {
                    path: "src/lib.rs".into(),
                    is_doc: false,
                }],
                via_pull_request: false,
            })
            .collect()
    })
}

fn raw_events() -> impl Strategy<Value = Vec<CollaborationEvent>> {
    prop::collection::vec(
        (
            0usize..5,
            0i64..200_000,
            prop::sample::select(EventKind::ALL.to_vec()),
        ),
        0..60,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .map(|(dev, minute, kind)| CollaborationEvent {
                repo_id: "r0".into(),
                actor_key: format!("dev{dev}@x"),
                occurred_at: at(minute),
                kind,
                raw_kind: kind.as_str().into(),
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ingesting_twice_is_idempotent(commits in raw_commits(), events in raw_events()) {
        let ids = IdentityMap::new();
        let cutoff = at(300_000);
        let once = build_timeline(&commits, &events, &ids, "org", cutoff);
        let doubled_c: Vec<_> = commits.iter().chain(&commits).cloned().collect();
        let doubled_e: Vec<_> = events.iter().chain(&events).cloned().collect();
        let twice = build_timeline(&doubled_c, &doubled_e, &ids, "org", cutoff);
        prop_assert_eq!(&once.timelines.keys().collect::<Vec<_>>(), &twice.timelines.keys().collect::<Vec<_>>());
        for (k, tl) in &once.timelines {
            prop_assert_eq!(&tl.commit_days, &twice.timelines[k].commit_days);
        }
    }

    #[test]
    fn passive_events_never_reach_timelines(commits in raw_commits(), events in raw_events()) {
        let set = build_timeline(&commits, &events, &IdentityMap::new(), "org", at(300_000));
        let expected: std::collections::BTreeSet<(String, DateTime<Utc>, &str)> = events
            .iter()
            .filter(|e| !e.kind.is_passive())
            .map(|e| (e.actor_key.clone(), e.occurred_at, e.kind.as_str()))
            .collect();
        let mut got = std::collections::BTreeSet::new();
        for (k, tl) in &set.timelines {
            prop_assert!(tl.validate().is_ok());
            for e in &tl.activity_events {
                if e.kind != ActivityKind::Commit {
                    got.insert((k.clone(), e.at));
                }
            }
        }
        let expected_keys: std::collections::BTreeSet<_> =
            expected.iter().map(|(k, t, _)| (k.clone(), *t)).collect();
        prop_assert_eq!(got, expected_keys);
    }

    #[test]
    fn commit_days_are_the_distinct_author_dates(commits in raw_commits()) {
        let set = build_timeline(&commits, &[], &IdentityMap::new(), "org", at(300_000));
        let mut expected: BTreeMap<String, std::collections::BTreeSet<NaiveDate>> = BTreeMap::new();
        for c in &commits {
            expected.entry(c.author_email.clone()).or_default().insert(c.authored_at.date_naive());
        }
        for (k, days) in expected {
            prop_assert_eq!(&set.timelines[&k].commit_days, &days.into_iter().collect::<Vec<_>>());
        }
    }

    #[test]
    fn equal_timestamp_reordering_changes_nothing(
        commits in raw_commits(),
        events in raw_events(),
        seed in any::<u64>(),
    ) {
        let mut c2 = commits.clone();
        c2.reverse();
        let mut e2 = events.clone();
        e2.reverse();
        if !e2.is_empty() {
            let k = (seed as usize) % e2.len();
            e2.rotate_left(k);
        }
        let ids = IdentityMap::new();
        let a = build_timeline(&commits, &events, &ids, "org", at(300_000));
        let b = build_timeline(&c2, &e2, &ids, "org", at(300_000));
        prop_assert_eq!(a.timelines, b.timelines);
    }
}

// ---------------------------------------------------------------------------
// core identification

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn commit_based_set_grows_with_threshold(
        counts in prop::collection::vec(1usize..100, 1..12),
        t1 in 0.05f64..1.0,
        t2 in 0.05f64..1.0,
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let map: BTreeMap<String, usize> =
            counts.iter().enumerate().map(|(i, n)| (format!("d{i:02}"), *n)).collect();
        let small = commit_based_from_counts("p", &map, lo).unwrap();
        let large = commit_based_from_counts("p", &map, hi).unwrap();
        prop_assert!(!small.members.is_empty());
        for m in &small.members {
            prop_assert!(large.members.contains(m));
        }
        let total: usize = counts.iter().sum();
        let covered: usize = large.members.iter().map(|m| map[m]).sum();
        prop_assert!(covered as f64 >= hi * total as f64 - 1e-9);
    }

    #[test]
    fn truck_factor_is_a_nonempty_subset_of_code_authors(
        rows in prop::collection::vec((0usize..6, 0usize..8, any::<bool>()), 1..40),
    ) {
        let commits: Vec<CommitRecord> = rows.iter().enumerate().map(|(i, (dev, file, doc))| CommitRecord {
            repo_id: "p".into(),
            sha: format!("{i:06x}"),
            author_name: format!("d{dev}"),
            author_email: format!("d{dev}@x"),
            authored_at: at(i as i64 * 60),
            files: vec![FileChange {
                path: if *doc { format!("docs/f{file}.md") } else { format!("src/f{file}.rs") },
                is_doc: *doc,
            }],
            via_pull_request: false,
        }).collect();
        let coders: std::collections::BTreeSet<String> = commits.iter()
            .filter(|c| !c.is_doc_only())
            .map(|c| c.author_email.clone())
            .collect();
        match truck_factor("p", &commits, &IdentityMap::new()) {
            Ok(tf) => {
                prop_assert!(!tf.members.is_empty());
                for m in &tf.members {
                    prop_assert!(coders.contains(m), "{} never touched code", m);
                }
            }
            Err(_) => prop_assert!(coders.is_empty()),
        }
    }
}

// ---------------------------------------------------------------------------
// detector

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn breaks_are_well_formed_pauses(offsets in commit_offsets(), cfg in detector_config()) {
        let days = offsets_to_days(&offsets);
        let det = run_detector(&days, &cfg);
        let pauses = pauses_from_days(&days);
        for b in &det.breaks {
            prop_assert!(b.is_well_formed());
            prop_assert!(pauses.contains(&b.pause));
        }
        for w in det.breaks.windows(2) {
            prop_assert!(w[0].end() <= w[1].start());
        }
        if let Some(last) = det.windows.last() {
            prop_assert!(last.window.end >= *days.last().unwrap());
        }
    }

    #[test]
    fn shifting_by_whole_calendar_cycles_shifts_breaks(
        offsets in commit_offsets(),
        cfg in detector_config(),
        cycles in -2i64..=2,
    ) {
        let days = offsets_to_days(&offsets);
        let shift = Duration::days(cycles * GREGORIAN_CYCLE);
        let moved: Vec<NaiveDate> = days.iter().map(|d| *d + shift).collect();
        let a = run_detector(&days, &cfg).breaks;
        let b = run_detector(&moved, &cfg).breaks;
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.start() + shift, y.start());
            prop_assert_eq!(x.end() + shift, y.end());
            prop_assert_eq!(x.window.start + shift, y.window.start);
            prop_assert_eq!(x.threshold, y.threshold);
            prop_assert_eq!(x.source, y.source);
        }
    }

    #[test]
    fn detection_is_deterministic(offsets in commit_offsets(), cfg in detector_config()) {
        let days = offsets_to_days(&offsets);
        prop_assert_eq!(run_detector(&days, &cfg), run_detector(&days, &cfg));
    }
}

// ---------------------------------------------------------------------------
// lifecycle

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn segments_cover_the_observed_interval((commits, others, end) in trace_inputs()) {
        let trace = trace_of(&commits, &others, end, &LifecycleConfig::default());
        prop_assert_eq!(trace.first_day(), Some(base()));
        prop_assert_eq!(trace.observation_end(), Some(plus(base(), end)));
        let total: i64 = trace.segments.iter().map(|s| s.length_days()).sum();
        prop_assert_eq!(total, end);
        for w in trace.segments.windows(2) {
            prop_assert_eq!(w[0].end, w[1].start);
            if w[1].state == State::Gone {
                prop_assert_eq!(w[0].state, State::Inactive);
            }
        }
        prop_assert!(trace.segments.last().unwrap().ongoing);
        prop_assert!(trace.validate().is_ok());
    }

    #[test]
    fn removing_events_never_creates_activity((commits, others, end) in trace_inputs()) {
        let lc = LifecycleConfig::default();
        let with = trace_of(&commits, &others, end, &lc);
        let without = trace_of(&commits, &[], end, &lc);
        prop_assert_eq!(days_in(&without, State::ActiveNonCoding), 0);
        prop_assert_eq!(days_in(&with, State::ActiveCoding), days_in(&without, State::ActiveCoding));
        let idle = |t: &LifecycleTrace| days_in(t, State::Inactive) + days_in(t, State::Gone);
        prop_assert!(idle(&without) >= idle(&with));

        // dropping any single event can only shrink non-coding time
        if !others.is_empty() {
            let fewer: Vec<i64> = others[1..].to_vec();
            let t = trace_of(&commits, &fewer, end, &lc);
            prop_assert!(days_in(&t, State::ActiveNonCoding) <= days_in(&with, State::ActiveNonCoding));
        }
    }

    #[test]
    fn longer_gone_horizon_never_adds_gone_segments(
        (commits, others, end) in trace_inputs(),
        g1 in 30u32..500,
        g2 in 30u32..500,
    ) {
        let (short, long) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let a = trace_of(&commits, &others, end, &LifecycleConfig { gone_days: short });
        let b = trace_of(&commits, &others, end, &LifecycleConfig { gone_days: long });
        prop_assert!(b.count_in(State::Gone) <= a.count_in(State::Gone));
    }
}

// ---------------------------------------------------------------------------
// analytics

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn holm_is_monotone_and_never_below_raw(p in prop::collection::vec(0.0f64..=1.0, 1..20)) {
        let adj = holm_adjust(&p);
        for i in 0..p.len() {
            prop_assert!(adj[i] >= p[i]);
            prop_assert!(adj[i] <= 1.0);
            for j in 0..p.len() {
                if p[i] <= p[j] {
                    prop_assert!(adj[i] <= adj[j] || p[i] == p[j]);
                }
            }
        }
    }

    #[test]
    fn cliffs_delta_is_bounded_and_antisymmetric(
        x in prop::collection::vec(0.0f64..50.0, 1..20),
        y in prop::collection::vec(0.0f64..50.0, 1..20),
    ) {
        let d = cliffs_delta(&x, &y).unwrap();
        prop_assert!((-1.0..=1.0).contains(&d));
        prop_assert_eq!(cliffs_delta(&y, &x).unwrap(), -d);
    }

    #[test]
    fn wilcoxon_rank_sums_partition_the_total(
        pairs in prop::collection::vec((0i32..20, 0i32..20), 1..40),
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        if let Some(r) = wilcoxon_signed_rank(&x, &y) {
            let n = r.n as f64;
            prop_assert_eq!(r.w_plus + r.w_minus, n * (n + 1.0) / 2.0);
            for p in [r.p_less, r.p_greater, r.p_two_sided] {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
            }
        } else {
            prop_assert!(pairs.iter().all(|p| p.0 == p.1));
        }
    }

    #[test]
    fn matrices_ignore_trace_order(
        inputs in prop::collection::vec(trace_inputs(), 1..8),
        rotate in 0usize..8,
    ) {
        let lc = LifecycleConfig::default();
        let mut traces: Vec<LifecycleTrace> =
            inputs.iter().map(|(c, o, e)| trace_of(c, o, *e, &lc)).collect();
        for mode in [SelfLoopMode::Pauses, SelfLoopMode::Boundaries] {
            let a = transition_matrix(&traces, "aggregate", mode);
            let k = rotate % traces.len();
            traces.rotate_left(k);
            traces.reverse();
            let b = transition_matrix(&traces, "aggregate", mode);
            prop_assert_eq!(a, b);
        }
    }
}

#[test]
fn weekly_hiatus_is_found_wherever_the_history_starts() {
    // a 120-day hiatus in a weekly rhythm is found wherever the history starts
    for start in [
        ymd(2019, 1, 7),
        ymd(2019, 5, 20),
        ymd(2020, 2, 3),
        ymd(2023, 11, 27),
    ] {
        let days: Vec<NaiveDate> = (0..=140)
            .step_by(7)
            .chain((260..=435).step_by(7))
            .map(|n| plus(start, n))
            .collect();
        let breaks = run_detector(&days, &DetectorConfig::default()).breaks;
        assert_eq!(breaks.len(), 1);
        assert_eq!(breaks[0].start(), plus(start, 140));
        assert_eq!(breaks[0].pause.length_days, 120);
    }
}
