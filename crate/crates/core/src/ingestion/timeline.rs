use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::{DateTime, Utc};

use super::{
    ActivityEvent, ActivityKind, CollaborationEvent, CommitRecord, DeveloperTimeline, IdentityMap,
};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TimelineSet {
    pub timelines: BTreeMap<String, DeveloperTimeline>,
    pub warnings: Vec<String>,
}

#[derive(Default)]
struct Acc {
    days: BTreeSet<chrono::NaiveDate>,
    events: Vec<ActivityEvent>,
}

/// Merges commits and collaboration events into one timeline per developer.
///
/// Commits are deduplicated by `(repo, sha)`, passive events are dropped,
/// and anything after `cutoff` is discarded with a warning. Developers seen
/// only through passive events still get an (empty) timeline.
pub fn build_timeline(
    commits: &[CommitRecord],
    events: &[CollaborationEvent],
    ids: &IdentityMap,
    org: &str,
    cutoff: DateTime<Utc>,
) -> TimelineSet {
    let mut acc: BTreeMap<String, Acc> = BTreeMap::new();
    let mut unresolved = BTreeSet::new();
    let mut seen_sha = HashSet::new();
    let mut late = 0usize;

    for c in commits {
        if !seen_sha.insert((c.repo_id.as_str(), c.sha.as_str())) {
            continue;
        }
        let who = ids.resolve_author(&c.author_name, &c.author_email);
        if !who.resolved && !ids.is_empty() {
            unresolved.insert(who.key.clone());
        }
        let entry = acc.entry(who.key).or_default();
        if c.authored_at > cutoff {
            late += 1;
            continue;
        }
        entry.days.insert(c.authored_day());
        entry.events.push(ActivityEvent {
            at: c.authored_at,
            kind: ActivityKind::Commit,
            repo_id: c.repo_id.clone(),
        });
    }

    for e in events {
        let who = ids.resolve_actor(&e.actor_key);
        if !who.resolved && !ids.is_empty() {
            unresolved.insert(who.key.clone());
        }
        let entry = acc.entry(who.key).or_default();
        let Some(kind) = e.kind.activity_kind() else {
            continue;
        };
        if e.occurred_at > cutoff {
            late += 1;
            continue;
        }
        entry.events.push(ActivityEvent {
            at: e.occurred_at,
            kind,
            repo_id: e.repo_id.clone(),
        });
    }

    let mut warnings: Vec<String> = unresolved
        .into_iter()
        .map(|k| format!("unresolved identity kept as raw key: {k}"))
        .collect();
    if late > 0 {
        warnings.push(format!("{late} records after the cutoff were dropped"));
    }

    let timelines = acc
        .into_iter()
        .map(|(key, mut a)| {
            a.events.sort();
            a.events.dedup();
            let tl = DeveloperTimeline {
                developer_key: key.clone(),
                org_id: org.to_string(),
                commit_days: a.days.into_iter().collect(),
                activity_events: a.events,
                observation_end: cutoff,
            };
            (key, tl)
        })
        .collect();

    TimelineSet {
        timelines,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::{EventKind, FileChange};
    use chrono::{NaiveDate, TimeZone};

    fn ts(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    fn commit(sha: &str, email: &str, at: &str) -> CommitRecord {
        CommitRecord {
            repo_id: "o/a".into(),
            sha: sha.into(),
            author_name: email.split('@').next().unwrap().into(),
            author_email: email.into(),
            authored_at: ts(at),
            files: vec![FileChange {
                path: "x.c".into(),
                is_doc: false,
            }],
            via_pull_request: false,
        }
    }

    fn event(actor: &str, at: &str, kind: EventKind) -> CollaborationEvent {
        CollaborationEvent {
            repo_id: "o/b".into(),
            actor_key: actor.into(),
            occurred_at: ts(at),
            kind,
            raw_kind: kind.as_str().into(),
        }
    }

    fn cutoff() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap()
    }

    #[test]
    fn same_day_dedupe() {
        let c = [
            commit("1", "a@x", "2020-01-01T03:00:00Z"),
            commit("2", "a@x", "2020-01-01T23:00:00Z"),
        ];
        let set = build_timeline(&c, &[], &IdentityMap::new(), "o", cutoff());
        let tl = &set.timelines["a@x"];
        assert_eq!(
            tl.commit_days,
            vec![NaiveDate::from_ymd_opt(2020, 1, 1).unwrap()]
        );
        assert_eq!(tl.activity_events.len(), 2);
        tl.validate().unwrap();
    }

    #[test]
    fn passive_only_developer() {
        let e = [
            event("bob", "2020-02-01T00:00:00Z", EventKind::MentionReceived),
            event("bob", "2020-02-02T00:00:00Z", EventKind::AssignmentReceived),
        ];
        let set = build_timeline(&[], &e, &IdentityMap::new(), "o", cutoff());
        let tl = &set.timelines["bob"];
        assert!(tl.activity_events.is_empty());
        assert!(tl.commit_days.is_empty());
    }

    #[test]
    fn aliases_merge() {
        let mut ids = IdentityMap::new();
        ids.insert("a@work", "ann");
        ids.insert("a@home", "ann");
        ids.insert("ann-gh", "ann");
        let c = [
            commit("1", "a@work", "2020-01-01T10:00:00Z"),
            commit("2", "a@home", "2020-01-02T10:00:00Z"),
        ];
        let e = [event("ann-gh", "2020-01-03T00:00:00Z", EventKind::PrOpened)];
        let set = build_timeline(&c, &e, &ids, "o", cutoff());
        assert_eq!(set.timelines.len(), 1);
        let tl = &set.timelines["ann"];
        assert_eq!(tl.commit_days.len(), 2);
        assert_eq!(tl.activity_events.len(), 3);
        assert_eq!(tl.activity_events[2].kind, ActivityKind::PrOpened);
        assert!(set.warnings.is_empty());
    }

    #[test]
    fn unresolved_and_late_records_warn() {
        let mut ids = IdentityMap::new();
        ids.insert("a@x", "ann");
        let c = [
            commit("1", "b@x", "2020-01-01T10:00:00Z"),
            commit("2", "a@x", "2022-01-01T10:00:00Z"),
        ];
        let set = build_timeline(&c, &[], &ids, "o", cutoff());
        assert!(set.timelines["ann"].commit_days.is_empty());
        assert_eq!(set.warnings.len(), 2);
        assert!(set.warnings[0].contains("b@x"));
    }

    #[test]
    fn double_ingest_is_idempotent() {
        let c = vec![
            commit("1", "a@x", "2020-01-01T10:00:00Z"),
            commit("2", "a@x", "2020-01-05T10:00:00Z"),
        ];
        let e = vec![event(
            "a@x",
            "2020-01-03T00:00:00Z",
            EventKind::IssueComment,
        )];
        let once = build_timeline(&c, &e, &IdentityMap::new(), "o", cutoff());
        let c2: Vec<_> = c.iter().chain(&c).cloned().collect();
        let e2: Vec<_> = e.iter().chain(&e).cloned().collect();
        let twice = build_timeline(&c2, &e2, &IdentityMap::new(), "o", cutoff());
        assert_eq!(once, twice);
    }
}
