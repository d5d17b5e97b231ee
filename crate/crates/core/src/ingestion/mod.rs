//! Commit-log and forge-event ingestion into organization-level developer
//! timelines.

mod cache;
mod docs;
mod events;
mod gitlog;
mod identity;
mod timeline;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

pub use cache::{cache_load, cache_store, CachedCorpus, CACHE_FORMAT_VERSION};
pub use docs::{DocPatterns, DEFAULT_DOC_PATTERNS};
pub use events::{classify_event_type, parse_events, ParsedEvents, EVENT_TYPE_TABLE};
pub use gitlog::{parse_commit_log, LogFormat, ParsedLog};
pub use identity::{IdentityMap, Resolution};
pub use timeline::{build_timeline, TimelineSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub is_doc: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub repo_id: String,
    pub sha: String,
    pub author_name: String,
    pub author_email: String,
    pub authored_at: DateTime<Utc>,
    pub files: Vec<FileChange>,
    pub via_pull_request: bool,
}

impl CommitRecord {
    /// A commit is documentation-only when it touched at least one path and
    /// every touched path is documentation. Commits without path
    /// information are never doc-only.
    pub fn is_doc_only(&self) -> bool {
        !self.files.is_empty() && self.files.iter().all(|f| f.is_doc)
    }

    pub fn authored_day(&self) -> NaiveDate {
        self.authored_at.date_naive()
    }
}

/// Forge event kinds after mapping raw export type strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    PrOpened,
    PrComment,
    IssueOpened,
    IssueComment,
    IssueActionActive,
    MentionReceived,
    AssignmentReceived,
    OtherPassive,
}

impl EventKind {
    pub const ALL: [EventKind; 8] = [
        EventKind::PrOpened,
        EventKind::PrComment,
        EventKind::IssueOpened,
        EventKind::IssueComment,
        EventKind::IssueActionActive,
        EventKind::MentionReceived,
        EventKind::AssignmentReceived,
        EventKind::OtherPassive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::PrOpened => "pr_opened",
            EventKind::PrComment => "pr_comment",
            EventKind::IssueOpened => "issue_opened",
            EventKind::IssueComment => "issue_comment",
            EventKind::IssueActionActive => "issue_action_active",
            EventKind::MentionReceived => "mention_received",
            EventKind::AssignmentReceived => "assignment_received",
            EventKind::OtherPassive => "other_passive",
        }
    }

    /// Things that happen *to* a developer rather than *by* them.
    pub fn is_passive(self) -> bool {
        matches!(
            self,
            EventKind::MentionReceived | EventKind::AssignmentReceived | EventKind::OtherPassive
        )
    }

    /// The activity a non-passive event counts as, `None` for passive kinds.
    pub fn activity_kind(self) -> Option<ActivityKind> {
        match self {
            EventKind::PrOpened => Some(ActivityKind::PrOpened),
            EventKind::PrComment => Some(ActivityKind::PrComment),
            EventKind::IssueOpened => Some(ActivityKind::IssueOpened),
            EventKind::IssueComment => Some(ActivityKind::IssueComment),
            EventKind::IssueActionActive => Some(ActivityKind::IssueAction),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollaborationEvent {
    pub repo_id: String,
    pub actor_key: String,
    pub occurred_at: DateTime<Utc>,
    pub kind: EventKind,
    pub raw_kind: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityClass {
    Coding,
    NonCodingActive,
}

/// Kinds of activity that may appear on a timeline. Passive event kinds
/// have no counterpart here, so they cannot be stored on a timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityKind {
    Commit,
    PrOpened,
    PrComment,
    IssueOpened,
    IssueComment,
    IssueAction,
}

impl ActivityKind {
    pub fn class(self) -> ActivityClass {
        match self {
            ActivityKind::Commit | ActivityKind::PrOpened => ActivityClass::Coding,
            _ => ActivityClass::NonCodingActive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActivityEvent {
    pub at: DateTime<Utc>,
    pub kind: ActivityKind,
    pub repo_id: String,
}

impl ActivityEvent {
    pub fn class(&self) -> ActivityClass {
        self.kind.class()
    }

    pub fn day(&self) -> NaiveDate {
        self.at.date_naive()
    }
}

/// All activity of one developer across every repository of an organization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeveloperTimeline {
    pub developer_key: String,
    pub org_id: String,
    /// Distinct UTC dates with at least one authored commit, strictly increasing.
    pub commit_days: Vec<NaiveDate>,
    /// Commits and non-passive collaboration events, sorted by time.
    pub activity_events: Vec<ActivityEvent>,
    pub observation_end: DateTime<Utc>,
}

impl DeveloperTimeline {
    pub fn first_commit_day(&self) -> Option<NaiveDate> {
        self.commit_days.first().copied()
    }

    pub fn last_commit_day(&self) -> Option<NaiveDate> {
        self.commit_days.last().copied()
    }

    pub fn observation_end_day(&self) -> NaiveDate {
        self.observation_end.date_naive()
    }

    /// Non-commit activity days within `[from, to]`, sorted and deduplicated.
    pub fn non_commit_days_between(&self, from: NaiveDate, to: NaiveDate) -> Vec<NaiveDate> {
        let mut days: Vec<NaiveDate> = self
            .activity_events
            .iter()
            .filter(|e| e.kind != ActivityKind::Commit)
            .map(ActivityEvent::day)
            .filter(|d| *d >= from && *d <= to)
            .collect();
        days.dedup();
        days
    }

    /// Checks the structural invariants a built timeline must satisfy.
    pub fn validate(&self) -> crate::Result<()> {
        if self.commit_days.windows(2).any(|w| w[0] >= w[1]) {
            return Err(crate::Error::Consistency(format!(
                "{}: commit days not strictly increasing",
                self.developer_key
            )));
        }
        if self.activity_events.windows(2).any(|w| w[0].at > w[1].at) {
            return Err(crate::Error::Consistency(format!(
                "{}: activity events not time-sorted",
                self.developer_key
            )));
        }
        if self
            .activity_events
            .iter()
            .any(|e| e.at > self.observation_end)
        {
            return Err(crate::Error::Consistency(format!(
                "{}: activity after observation end",
                self.developer_key
            )));
        }
        Ok(())
    }
}
