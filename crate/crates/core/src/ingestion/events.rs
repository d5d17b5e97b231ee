//! Forge event exports.
//!
//! Input is newline-delimited JSON with the fields `repo`, `actor`,
//! `created_at` and `type`. The `type` string is mapped to an [`EventKind`]
//! through [`EVENT_TYPE_TABLE`]; the kind's own snake_case name is accepted
//! as well. Unknown types map to `other_passive` and never count as activity.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::Deserialize;

use super::gitlog::parse_timestamp;
use super::{CollaborationEvent, EventKind};
use crate::error::{Error, Result};

/// Forge event type strings and the kind each one maps to. `Type:action`
/// entries cover GitHub events whose payload action decides the kind.
pub const EVENT_TYPE_TABLE: &[(&str, EventKind)] = &[
    ("PullRequestEvent:opened", EventKind::PrOpened),
    ("PullRequestEvent:reopened", EventKind::IssueActionActive),
    ("PullRequestEvent:closed", EventKind::IssueActionActive),
    ("PullRequestEvent:merged", EventKind::IssueActionActive),
    ("PullRequestEvent:labeled", EventKind::IssueActionActive),
    ("PullRequestEvent:assigned", EventKind::IssueActionActive),
    (
        "PullRequestEvent:review_requested",
        EventKind::IssueActionActive,
    ),
    ("PullRequestReviewEvent", EventKind::PrComment),
    ("PullRequestReviewCommentEvent", EventKind::PrComment),
    ("PullRequestReviewThreadEvent", EventKind::PrComment),
    ("IssuesEvent:opened", EventKind::IssueOpened),
    ("IssuesEvent:closed", EventKind::IssueActionActive),
    ("IssuesEvent:reopened", EventKind::IssueActionActive),
    ("IssuesEvent:labeled", EventKind::IssueActionActive),
    ("IssuesEvent:unlabeled", EventKind::IssueActionActive),
    ("IssuesEvent:assigned", EventKind::IssueActionActive),
    ("IssuesEvent:unassigned", EventKind::IssueActionActive),
    ("IssuesEvent:milestoned", EventKind::IssueActionActive),
    ("IssuesEvent:edited", EventKind::IssueActionActive),
    ("IssueCommentEvent", EventKind::IssueComment),
    ("CommitCommentEvent", EventKind::PrComment),
    // issue timeline API event names, actor is the one acting
    ("commented", EventKind::IssueComment),
    ("reviewed", EventKind::PrComment),
    ("line-commented", EventKind::PrComment),
    ("closed", EventKind::IssueActionActive),
    ("reopened", EventKind::IssueActionActive),
    ("labeled", EventKind::IssueActionActive),
    ("unlabeled", EventKind::IssueActionActive),
    ("assigned", EventKind::IssueActionActive),
    ("unassigned", EventKind::IssueActionActive),
    ("milestoned", EventKind::IssueActionActive),
    ("subscribed", EventKind::IssueActionActive),
    ("merged", EventKind::IssueActionActive),
    ("renamed", EventKind::IssueActionActive),
    // things that happen to the actor
    ("mentioned", EventKind::MentionReceived),
    ("MentionEvent", EventKind::MentionReceived),
    ("assignment_received", EventKind::AssignmentReceived),
    ("unassignment_received", EventKind::AssignmentReceived),
    ("review_request_received", EventKind::AssignmentReceived),
    ("WatchEvent", EventKind::OtherPassive),
    ("ForkEvent", EventKind::OtherPassive),
];

pub fn classify_event_type(raw: &str) -> EventKind {
    let raw = raw.trim();
    if let Some(kind) = EventKind::ALL.iter().find(|k| k.as_str() == raw) {
        return *kind;
    }
    EVENT_TYPE_TABLE
        .iter()
        .find(|(name, _)| *name == raw)
        .map(|(_, k)| *k)
        .unwrap_or(EventKind::OtherPassive)
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct ParsedEvents {
    pub events: Vec<CollaborationEvent>,
    pub malformed: usize,
    /// Raw type strings that fell through to `other_passive`, with counts.
    pub unmapped_types: BTreeMap<String, usize>,
}

#[derive(Deserialize)]
struct RawEvent {
    repo: String,
    actor: String,
    created_at: String,
    #[serde(rename = "type")]
    kind: String,
}

pub fn parse_events<R: BufRead>(reader: R) -> Result<ParsedEvents> {
    let mut out = ParsedEvents::default();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::Format(format!("unreadable event stream: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let Ok(raw) = serde_json::from_str::<RawEvent>(&line) else {
            out.malformed += 1;
            continue;
        };
        let Some(at) = parse_timestamp(&raw.created_at) else {
            out.malformed += 1;
            continue;
        };
        if raw.actor.trim().is_empty() {
            out.malformed += 1;
            continue;
        }
        let kind = classify_event_type(&raw.kind);
        if kind == EventKind::OtherPassive
            && !EVENT_TYPE_TABLE.iter().any(|(n, _)| *n == raw.kind)
            && raw.kind != EventKind::OtherPassive.as_str()
        {
            *out.unmapped_types.entry(raw.kind.clone()).or_default() += 1;
        }
        out.events.push(CollaborationEvent {
            repo_id: raw.repo,
            actor_key: raw.actor.trim().to_string(),
            occurred_at: at,
            kind,
            raw_kind: raw.kind,
        });
    }
    let total = out.events.len() + out.malformed;
    if total > 0 && out.malformed * 10 > total {
        return Err(Error::TooManyMalformed {
            malformed: out.malformed,
            total,
            format: "event ndjson",
        });
    }
    Ok(out)
}
