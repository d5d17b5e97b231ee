//! On-disk timeline cache.
//!
//! Layout of a cache directory:
//!
//! ```text
//! manifest.json        format name + version, org, cutoff, developer index
//! commits.json         every ingested CommitRecord (needed for core selection)
//! devs/000000.json     one DeveloperTimeline per file, in manifest order
//! ```
//!
//! Every file carries the format version; a mismatch refuses the load.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{CommitRecord, DeveloperTimeline};
use crate::error::{Error, Result};

pub const CACHE_FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "devbreaks-timeline-cache";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedCorpus {
    pub org_id: String,
    pub observation_end: DateTime<Utc>,
    pub commits: Vec<CommitRecord>,
    pub timelines: BTreeMap<String, DeveloperTimeline>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    format_version: u32,
    org_id: String,
    observation_end: DateTime<Utc>,
    developers: Vec<ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    developer_key: String,
    file: String,
}

#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    format_version: u32,
    body: T,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let bytes = serde_json::to_vec(value)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_versioned<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let v: Versioned<T> = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
    if v.format_version != CACHE_FORMAT_VERSION {
        return Err(Error::Cache(format!(
            "{}: format version {} (expected {CACHE_FORMAT_VERSION})",
            path.display(),
            v.format_version
        )));
    }
    Ok(v.body)
}

pub fn cache_store(dir: &Path, corpus: &CachedCorpus) -> Result<()> {
    let devs_dir = dir.join("devs");
    if devs_dir.exists() {
        fs::remove_dir_all(&devs_dir).map_err(|e| Error::io(&devs_dir, e))?;
    }
    fs::create_dir_all(&devs_dir).map_err(|e| Error::io(&devs_dir, e))?;

    let mut developers = Vec::with_capacity(corpus.timelines.len());
    for (i, (key, tl)) in corpus.timelines.iter().enumerate() {
        let file = format!("devs/{i:06}.json");
        write_json(
            &dir.join(&file),
            &Versioned {
                format_version: CACHE_FORMAT_VERSION,
                body: tl,
            },
        )?;
        developers.push(ManifestEntry {
            developer_key: key.clone(),
            file,
        });
    }
    write_json(
        &dir.join("commits.json"),
        &Versioned {
            format_version: CACHE_FORMAT_VERSION,
            body: &corpus.commits,
        },
    )?;
    write_json(
        &dir.join("manifest.json"),
        &Manifest {
            format: FORMAT_NAME.to_string(),
            format_version: CACHE_FORMAT_VERSION,
            org_id: corpus.org_id.clone(),
            observation_end: corpus.observation_end,
            developers,
        },
    )
}

pub fn cache_load(dir: &Path) -> Result<CachedCorpus> {
    let manifest_path = dir.join("manifest.json");
    let bytes = fs::read(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Cache(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format != FORMAT_NAME {
        return Err(Error::Cache(format!(
            "not a timeline cache: {}",
            manifest.format
        )));
    }
    if manifest.format_version != CACHE_FORMAT_VERSION {
        return Err(Error::Cache(format!(
            "cache format version {} (expected {CACHE_FORMAT_VERSION})",
            manifest.format_version
        )));
    }

    let commits: Vec<CommitRecord> = read_versioned(&dir.join("commits.json"))?;
    let mut timelines = BTreeMap::new();
    for entry in manifest.developers {
        if entry.file.contains("..") || Path::new(&entry.file).is_absolute() {
            return Err(Error::Cache(format!(
                "bad developer file path {}",
                entry.file
            )));
        }
        let tl: DeveloperTimeline = read_versioned(&dir.join(&entry.file))?;
        if tl.developer_key != entry.developer_key {
            return Err(Error::Cache(format!(
                "{} holds {} but manifest says {}",
                entry.file, tl.developer_key, entry.developer_key
            )));
        }
        timelines.insert(entry.developer_key, tl);
    }
    Ok(CachedCorpus {
        org_id: manifest.org_id,
        observation_end: manifest.observation_end,
        commits,
        timelines,
    })
}
