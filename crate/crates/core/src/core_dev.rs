//! Core developer selection.
//!
//! Two methods are supported:
//!
//! * **Commit-based heuristic**: the smallest group of top committers whose
//!   commits reach a share of the project total (80% by default).
//! * **Truck Factor**: the greedy removal set over file authorship, where
//!   authorship comes from the degree-of-authorship model
//!   `DOA = 3.293 + 1.098·FA + 0.164·DL − 0.321·ln(1 + AC)`.
//!
//! Documentation files never take part in Truck Factor computation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::{CommitRecord, IdentityMap};

pub const DEFAULT_CBH_THRESHOLD: f64 = 0.8;

const DOA_BASE: f64 = 3.293;
const DOA_FIRST_AUTHOR: f64 = 1.098;
const DOA_DELIVERIES: f64 = 0.164;
const DOA_ACCEPTANCES: f64 = 0.321;
const DOA_NORMALIZED_MIN: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreMethod {
    TruckFactor,
    CommitBased,
}

impl CoreMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CoreMethod::TruckFactor => "truck_factor",
            CoreMethod::CommitBased => "commit_based",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreDevSet {
    pub project_id: String,
    pub method: CoreMethod,
    pub members: Vec<String>,
    /// Commit share of the members (commit-based) or fraction of files
    /// orphaned once the members are removed (Truck Factor).
    pub coverage: f64,
}

impl CoreDevSet {
    pub fn contains(&self, dev: &str) -> bool {
        self.members.iter().any(|m| m == dev)
    }
}

/// Commits per resolved developer, optionally skipping doc-only commits.
pub fn commit_counts(
    commits: &[CommitRecord],
    ids: &IdentityMap,
    include_doc_only: bool,
) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for c in commits {
        if !include_doc_only && c.is_doc_only() {
            continue;
        }
        let key = ids.resolve_author(&c.author_name, &c.author_email).key;
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}

/// Smallest prefix of developers (by descending commit count) reaching
/// `threshold` of all counted commits. Developers tied with the last
/// member are all included.
pub fn commit_based_from_counts(
    project_id: &str,
    counts: &BTreeMap<String, usize>,
    threshold: f64,
) -> Result<CoreDevSet> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Config(format!(
            "commit share threshold must be in (0, 1], got {threshold}"
        )));
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(Error::EmptyProject(project_id.to_string()));
    }
    let mut ranked: Vec<(&String, usize)> = counts.iter().map(|(k, v)| (k, *v)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut members = Vec::new();
    let mut cum = 0usize;
    let mut boundary = None;
    for (dev, n) in &ranked {
        match boundary {
            Some(b) if *n < b => break,
            Some(_) => {}
            None => {}
        }
        members.push((*dev).clone());
        cum += n;
        if boundary.is_none() && cum as f64 / total as f64 >= threshold - 1e-12 {
            boundary = Some(*n);
        }
    }
    Ok(CoreDevSet {
        project_id: project_id.to_string(),
        method: CoreMethod::CommitBased,
        members,
        coverage: cum as f64 / total as f64,
    })
}

pub fn commit_based_core(
    project_id: &str,
    commits: &[CommitRecord],
    ids: &IdentityMap,
    threshold: f64,
    include_doc_only: bool,
) -> Result<CoreDevSet> {
    commit_based_from_counts(
        project_id,
        &commit_counts(commits, ids, include_doc_only),
        threshold,
    )
}

/// Degree of authorship of one developer on one file.
pub fn degree_of_authorship(first_author: bool, own_changes: usize, others_changes: usize) -> f64 {
    DOA_BASE
        + DOA_FIRST_AUTHOR * if first_author { 1.0 } else { 0.0 }
        + DOA_DELIVERIES * own_changes as f64
        - DOA_ACCEPTANCES * (1.0 + others_changes as f64).ln()
}

/// Authors of every non-doc file, keyed by path.
pub fn file_authors(
    commits: &[CommitRecord],
    ids: &IdentityMap,
) -> BTreeMap<String, BTreeSet<String>> {
    let mut ordered: Vec<&CommitRecord> = commits.iter().collect();
    ordered.sort_by(|a, b| {
        a.authored_at
            .cmp(&b.authored_at)
            .then_with(|| a.sha.cmp(&b.sha))
    });

    struct FileStats {
        first_author: String,
        changes: HashMap<String, usize>,
        total: usize,
    }
    let mut files: BTreeMap<&str, FileStats> = BTreeMap::new();
    for c in ordered {
        let dev = ids.resolve_author(&c.author_name, &c.author_email).key;
        for f in c.files.iter().filter(|f| !f.is_doc) {
            let st = files.entry(f.path.as_str()).or_insert_with(|| FileStats {
                first_author: dev.clone(),
                changes: HashMap::new(),
                total: 0,
            });
            *st.changes.entry(dev.clone()).or_insert(0) += 1;
            st.total += 1;
        }
    }

    files
        .into_iter()
        .map(|(path, st)| {
            let doas: Vec<(&String, f64)> = st
                .changes
                .iter()
                .map(|(dev, &dl)| {
                    let doa = degree_of_authorship(*dev == st.first_author, dl, st.total - dl);
                    (dev, doa)
                })
                .collect();
            let max = doas
                .iter()
                .map(|(_, d)| *d)
                .fold(f64::NEG_INFINITY, f64::max);
            let authors = doas
                .into_iter()
                .filter(|(_, d)| *d / max > DOA_NORMALIZED_MIN && *d >= DOA_BASE)
                .map(|(dev, _)| dev.clone())
                .collect();
            (path.to_string(), authors)
        })
        .collect()
}

/// Greedy Truck Factor: remove the developer authoring the most files
/// until strictly more than half the files have no remaining author.
pub fn truck_factor(
    project_id: &str,
    commits: &[CommitRecord],
    ids: &IdentityMap,
) -> Result<CoreDevSet> {
    let mut authors = file_authors(commits, ids);
    if authors.is_empty() {
        return Err(Error::EmptyProject(format!(
            "{project_id} (no non-doc files)"
        )));
    }
    let n_files = authors.len();
    let orphaned =
        |a: &BTreeMap<String, BTreeSet<String>>| a.values().filter(|s| s.is_empty()).count();

    let mut members = Vec::new();
    loop {
        let mut per_dev: BTreeMap<&String, usize> = BTreeMap::new();
        for s in authors.values() {
            for d in s {
                *per_dev.entry(d).or_insert(0) += 1;
            }
        }
        // max by count, ties to the smallest key
        let Some(top) = per_dev
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(d, _)| (*d).clone())
        else {
            break;
        };
        for s in authors.values_mut() {
            s.remove(&top);
        }
        members.push(top);
        if orphaned(&authors) * 2 > n_files {
            break;
        }
    }

    if members.is_empty() {
        // no file has an author under the DOA model; fall back to the
        // heaviest non-doc committer so the set is never empty
        let counts = commit_counts(commits, ids, false);
        if let Some((dev, _)) = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        {
            members.push(dev.clone());
        }
    }

    Ok(CoreDevSet {
        project_id: project_id.to_string(),
        method: CoreMethod::TruckFactor,
        members,
        coverage: orphaned(&authors) as f64 / n_files as f64,
    })
}

/// Hand corrections applied after automatic selection.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoreOverrides {
    entries: Vec<OverrideRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
struct OverrideRow {
    project: String,
    developer: String,
    action: OverrideAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum OverrideAction {
    Add,
    Remove,
}

impl CoreOverrides {
    /// CSV with header `project,developer,action`, action one of `add`/`remove`.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let entries = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(f)
    }

    pub fn apply(&self, set: &mut CoreDevSet) {
        for row in self.entries.iter().filter(|r| r.project == set.project_id) {
            match row.action {
                OverrideAction::Add if !set.contains(&row.developer) => {
                    set.members.push(row.developer.clone())
                }
                OverrideAction::Remove => set.members.retain(|m| *m != row.developer),
                _ => {}
            }
        }
    }
}

/// One row of the per-project core summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoreSummaryRow {
    pub project: String,
    pub devs: usize,
    pub tf: usize,
    pub core: usize,
    pub pct_tf_in_core: f64,
}

pub fn summarize(project: &str, devs: usize, tf: &CoreDevSet, core: &CoreDevSet) -> CoreSummaryRow {
    let inside = tf.members.iter().filter(|m| core.contains(m)).count();
    CoreSummaryRow {
        project: project.to_string(),
        devs,
        tf: tf.members.len(),
        core: core.members.len(),
        pct_tf_in_core: if tf.members.is_empty() {
            0.0
        } else {
            100.0 * inside as f64 / tf.members.len() as f64
        },
    }
}

/// Groups commits by repository.
pub fn by_project(commits: &[CommitRecord]) -> BTreeMap<&str, Vec<CommitRecord>> {
    let mut out: BTreeMap<&str, Vec<CommitRecord>> = BTreeMap::new();
    for c in commits {
        out.entry(c.repo_id.as_str()).or_default().push(c.clone());
    }
    out
}


#[cfg(test)]
mod tests {
    use super::fixtures::commits;
    use super::*;

    fn counts(v: &[(&str, usize)]) -> BTreeMap<String, usize> {
        v.iter().map(|(k, n)| (k.to_string(), *n)).collect()
    }

    #[test]
    fn cbh_examples() {
        let c = counts(&[("A", 50), ("B", 30), ("C", 15), ("D", 5)]);
        let s = commit_based_from_counts("p", &c, 0.8).unwrap();
        assert_eq!(s.members, vec!["A", "B"]);
        assert!((s.coverage - 0.8).abs() < 1e-12);

        let s = commit_based_from_counts("p", &counts(&[("solo", 3)]), 0.8).unwrap();
        assert_eq!(s.members, vec!["solo"]);

        let s = commit_based_from_counts("p", &counts(&[("A", 40), ("B", 40), ("C", 20)]), 0.8)
            .unwrap();
        assert_eq!(s.members, vec!["A", "B"]);
        let s2 = commit_based_from_counts("p", &counts(&[("A", 40), ("C", 40), ("B", 20)]), 0.8)
            .unwrap();
        assert_eq!(s2.members, vec!["A", "C"]);
    }

    #[test]
    fn cbh_boundary_ties_included() {
        let s = commit_based_from_counts("p", &counts(&[("A", 50), ("B", 30), ("C", 30)]), 0.7)
            .unwrap();
        assert_eq!(s.members, vec!["A", "B", "C"]);
    }

    #[test]
    fn cbh_errors() {
        assert!(matches!(
            commit_based_from_counts("p", &BTreeMap::new(), 0.8),
            Err(Error::EmptyProject(_))
        ));
        assert!(commit_based_from_counts("p", &counts(&[("A", 1)]), 0.0).is_err());
        assert!(commit_based_from_counts("p", &counts(&[("A", 1)]), 1.5).is_err());
    }

    #[test]
    fn cbh_doc_flag() {
        let c = commits(&[
            ("doc", &["a.md"]),
            ("doc", &["b.md"]),
            ("doc", &["c.md"]),
            ("dev", &["x.c"]),
        ]);
        let ids = IdentityMap::new();
        let excl = commit_based_core("p", &c, &ids, 0.8, false).unwrap();
        assert_eq!(excl.members, vec!["dev@x"]);
        let incl = commit_based_core("p", &c, &ids, 0.8, true).unwrap();
        assert_eq!(incl.members, vec!["doc@x", "dev@x"]);
    }

    #[test]
    fn doa_constants() {
        assert!((degree_of_authorship(true, 1, 0) - (3.293 + 1.098 + 0.164)).abs() < 1e-12);
        let v = degree_of_authorship(false, 2, 3);
        assert!((v - (3.293 + 0.328 - 0.321 * 4f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn tf_single_author() {
        let c = commits(&[("a", &["x.c", "y.c"]), ("a", &["z.c"])]);
        let s = truck_factor("p", &c, &IdentityMap::new()).unwrap();
        assert_eq!(s.members, vec!["a@x"]);
        assert_eq!(s.coverage, 1.0);
    }

    #[test]
    fn tf_two_sole_authors() {
        let c = commits(&[("a", &["1.c", "2.c"]), ("b", &["3.c", "4.c"])]);
        let s = truck_factor("p", &c, &IdentityMap::new()).unwrap();
        assert_eq!(s.members.len(), 2);
    }

    #[test]
    fn tf_ignores_doc_only_contributors() {
        let c = commits(&[
            ("writer", &["a.md", "b.md", "c.md", "d.md"]),
            ("writer", &["e.md"]),
            ("coder", &["x.c"]),
        ]);
        let s = truck_factor("p", &c, &IdentityMap::new()).unwrap();
        assert_eq!(s.members, vec!["coder@x"]);
    }

    #[test]
    fn tf_no_code_files() {
        let c = commits(&[("writer", &["a.md"])]);
        assert!(truck_factor("p", &c, &IdentityMap::new()).is_err());
    }

    #[test]
    fn heavy_editor_overtakes_creator() {
        // b edits x.c many times after a created it, so only b is an author
        let mut spec: Vec<(&str, &[&str])> = vec![("a", &["x.c"])];
        for _ in 0..20 {
            spec.push(("b", &["x.c"]));
        }
        let authors = file_authors(&commits(&spec), &IdentityMap::new());
        assert_eq!(authors["x.c"].iter().collect::<Vec<_>>(), vec!["b@x"]);
    }

    #[test]
    fn overrides() {
        let o = CoreOverrides::from_csv_reader(
            "project,developer,action\np,z@x,add\np,a@x,remove\nq,k,add\n".as_bytes(),
        )
        .unwrap();
        let mut s = CoreDevSet {
            project_id: "p".into(),
            method: CoreMethod::TruckFactor,
            members: vec!["a@x".into(), "b@x".into()],
            coverage: 1.0,
        };
        o.apply(&mut s);
        assert_eq!(s.members, vec!["b@x", "z@x"]);
        assert!(
            CoreOverrides::from_csv_reader("project,developer,action\np,a,maybe\n".as_bytes())
                .is_err()
        );
    }

    #[test]
    fn summary_row() {
        let tf = CoreDevSet {
            project_id: "p".into(),
            method: CoreMethod::TruckFactor,
            members: vec!["a".into(), "c".into()],
            coverage: 0.6,
        };
        let core = CoreDevSet {
            project_id: "p".into(),
            method: CoreMethod::CommitBased,
            members: vec!["a".into(), "b".into()],
            coverage: 0.8,
        };
        let r = summarize("p", 10, &tf, &core);
        assert_eq!((r.tf, r.core), (2, 2));
        assert_eq!(r.pct_tf_in_core, 50.0);
    }
}
