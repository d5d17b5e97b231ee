//! Documentation-path classification.

use std::path::Path;

use glob::{MatchOptions, Pattern};

use crate::error::{Error, Result};

pub const DEFAULT_DOC_PATTERNS: &[&str] = &[
    "*.md",
    "*.rst",
    "*.txt",
    "*.adoc",
    "docs/**",
    "doc/**",
    "LICENSE*",
    "CHANGELOG*",
];

const MATCH_OPTIONS: MatchOptions = MatchOptions {
    case_sensitive: false,
    require_literal_separator: false,
    require_literal_leading_dot: false,
};

/// Case-insensitive glob set deciding whether a changed path is documentation.
///
/// A pattern containing `/` is matched against the whole repository-relative
/// path; a bare pattern is matched against the file name only, so `LICENSE*`
/// also catches `vendor/LICENSE-MIT`.
#[derive(Debug, Clone)]
pub struct DocPatterns {
    sources: Vec<String>,
    patterns: Vec<Pattern>,
}

impl DocPatterns {
    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Result<Self> {
        let mut sources = Vec::with_capacity(patterns.len());
        let mut compiled = Vec::with_capacity(patterns.len());
        for p in patterns {
            let p = p.as_ref().trim();
            if p.is_empty() {
                continue;
            }
            let pat = Pattern::new(p)
                .map_err(|e| Error::Config(format!("bad doc pattern {p:?}: {e}")))?;
            sources.push(p.to_string());
            compiled.push(pat);
        }
        Ok(Self {
            sources,
            patterns: compiled,
        })
    }

    /// One pattern per line, `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let lines: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .collect();
        Self::new(&lines)
    }

    pub fn patterns(&self) -> &[String] {
        &self.sources
    }

    pub fn is_doc(&self, path: &str) -> bool {
        let path = path.trim_start_matches("./");
        let file_name = path.rsplit('/').next().unwrap_or(path);
        self.sources.iter().zip(&self.patterns).any(|(src, pat)| {
            if src.contains('/') {
                pat.matches_with(path, MATCH_OPTIONS)
            } else {
                pat.matches_with(file_name, MATCH_OPTIONS)
            }
        })
    }
}

impl Default for DocPatterns {
    fn default() -> Self {
        Self::new(DEFAULT_DOC_PATTERNS).expect("default doc patterns compile")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_set() {
        let d = DocPatterns::default();
        for p in [
            "README.md",
            "readme.MD",
            "guide/intro.rst",
            "notes.txt",
            "manual.adoc",
            "docs/api/index.html",
            "doc/x.png",
            "DOCS/x.c",
            "LICENSE",
            "license-apache",
            "third_party/LICENSE.MIT",
            "CHANGELOG",
        ] {
            assert!(d.is_doc(p), "{p} should be doc");
        }
        for p in [
            "src/a.c",
            "Makefile",
            "src/docs.rs",
            "lib/doc_utils.py",
            "a.mdx",
        ] {
            assert!(!d.is_doc(p), "{p} should not be doc");
        }
    }

    #[test]
    fn custom_and_bad_patterns() {
        let d = DocPatterns::new(&["*.html"]).unwrap();
        assert!(d.is_doc("site/index.HTML"));
        assert!(!d.is_doc("README.md"));
        assert!(DocPatterns::new(&["[unclosed"]).is_err());
    }
}
