//! Commit log readers.
//!
//! `git_log` is the output of
//! `git log --name-status --format='@@@%n%H|%an|%ae|%aI'`: a line holding
//! only `@@@` opens each record, the next line is
//! `<sha>|<author name>|<author email>|<ISO-8601 date>`, and every following
//! non-empty line is `<status>\t<path>` (renames and copies carry two paths,
//! the destination is kept).

use std::collections::HashSet;
use std::io::BufRead;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{CommitRecord, DocPatterns, FileChange};
use crate::error::{Error, Result};

pub const RECORD_SEPARATOR: &str = "@@@";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogFormat {
    GitLog,
    Ndjson,
}

impl LogFormat {
    pub fn name(self) -> &'static str {
        match self {
            LogFormat::GitLog => "git_log",
            LogFormat::Ndjson => "ndjson",
        }
    }
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct ParsedLog {
    pub commits: Vec<CommitRecord>,
    /// Records that could not be parsed and were skipped.
    pub malformed: usize,
    /// Records repeating an already seen `(repo, sha)`.
    pub duplicates: usize,
    /// Commits whose source record listed no paths (merges, path-less exports).
    pub without_paths: usize,
}

impl ParsedLog {
    fn total(&self) -> usize {
        self.commits.len() + self.malformed + self.duplicates
    }
}

/// Parses a commit log. `repo_id` names the repository for `git_log`
/// input and is the fallback for ndjson lines without a `repo` field.
pub fn parse_commit_log<R: BufRead>(
    reader: R,
    format: LogFormat,
    repo_id: &str,
    docs: &DocPatterns,
) -> Result<ParsedLog> {
    let mut out = ParsedLog::default();
    let mut seen = HashSet::new();
    let mut push = |out: &mut ParsedLog, rec: Option<CommitRecord>| match rec {
        Some(c) => {
            if seen.insert((c.repo_id.clone(), c.sha.clone())) {
                if c.files.is_empty() {
                    out.without_paths += 1;
                }
                out.commits.push(c);
            } else {
                out.duplicates += 1;
            }
        }
        None => out.malformed += 1,
    };

    match format {
        LogFormat::GitLog => {
            let mut current: Option<Vec<String>> = None;
            for line in reader.lines() {
                let line = line.map_err(|e| Error::Format(format!("unreadable stream: {e}")))?;
                let line = line.trim_end_matches('\r');
                if line == RECORD_SEPARATOR {
                    if let Some(lines) = current.take() {
                        push(&mut out, parse_git_record(&lines, repo_id, docs));
                    }
                    current = Some(Vec::new());
                } else if line.trim().is_empty() {
                    continue;
                } else if let Some(lines) = current.as_mut() {
                    lines.push(line.to_string());
                } else {
                    // content before the first separator
                    out.malformed += 1;
                    current = None;
                }
            }
            if let Some(lines) = current.take() {
                push(&mut out, parse_git_record(&lines, repo_id, docs));
            }
        }
        LogFormat::Ndjson => {
            for line in reader.lines() {
                let line = line.map_err(|e| Error::Format(format!("unreadable stream: {e}")))?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec = serde_json::from_str::<NdjsonCommit>(&line)
                    .ok()
                    .and_then(|r| r.into_record(repo_id, docs));
                push(&mut out, rec);
            }
        }
    }

    let total = out.total();
    if total > 0 && out.malformed * 10 > total {
        return Err(Error::TooManyMalformed {
            malformed: out.malformed,
            total,
            format: format.name(),
        });
    }
    Ok(out)
}

pub(crate) fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    // `git log --date=iso` style
    if let Ok(t) = DateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S %z") {
        return Some(t.with_timezone(&Utc));
    }
    // bare UTC timestamps
    chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .ok()
        .map(|t| t.and_utc())
}

fn parse_git_record(lines: &[String], repo_id: &str, docs: &DocPatterns) -> Option<CommitRecord> {
    let (header, rest) = lines.split_first()?;
    // name may contain '|', so peel sha from the left and email/date from the right
    let (sha, tail) = header.split_once('|')?;
    let (tail, date) = tail.rsplit_once('|')?;
    let (name, email) = tail.rsplit_once('|')?;
    let sha = sha.trim();
    if sha.is_empty() || !sha.chars().all(|c| c.is_ascii_hexdigit()) {
        return None;
    }
    let authored_at = parse_timestamp(date)?;

    let mut files = Vec::with_capacity(rest.len());
    for line in rest {
        let mut parts = line.split('\t');
        let status = parts.next()?;
        if status.is_empty() || !status.chars().next()?.is_ascii_alphabetic() {
            return None;
        }
        let path = parts.next_back()?.trim();
        if path.is_empty() {
            return None;
        }
        files.push(FileChange {
            path: path.to_string(),
            is_doc: docs.is_doc(path),
        });
    }

    Some(CommitRecord {
        repo_id: repo_id.to_string(),
        sha: sha.to_string(),
        author_name: name.trim().to_string(),
        author_email: email.trim().to_string(),
        authored_at,
        files,
        via_pull_request: false,
    })
}

#[derive(Deserialize)]
struct NdjsonCommit {
    #[serde(default)]
    repo: Option<String>,
    sha: String,
    #[serde(default)]
    author_name: String,
    #[serde(default)]
    author_email: String,
    authored_at: String,
    #[serde(default)]
    files: Vec<String>,
    #[serde(default)]
    via_pull_request: bool,
}

impl NdjsonCommit {
    fn into_record(self, repo_id: &str, docs: &DocPatterns) -> Option<CommitRecord> {
        if self.sha.trim().is_empty()
            || (self.author_name.is_empty() && self.author_email.is_empty())
        {
            return None;
        }
        let authored_at = parse_timestamp(&self.authored_at)?;
        let files = self
            .files
            .into_iter()
            .map(|path| FileChange {
                is_doc: docs.is_doc(&path),
                path,
            })
            .collect();
        Some(CommitRecord {
            repo_id: self.repo.unwrap_or_else(|| repo_id.to_string()),
            sha: self.sha,
            author_name: self.author_name,
            author_email: self.author_email,
            authored_at,
            files,
            via_pull_request: self.via_pull_request,
        })
    }
}
