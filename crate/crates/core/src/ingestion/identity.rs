//! Developer identity resolution.
//!
//! Commit authors resolve by exact (case-insensitive) email first, then by
//! name through the alias file. Event actors resolve by login through the
//! alias file. There is no fuzzy matching.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    pub key: String,
    /// False when no alias matched and the raw identifier became the key.
    pub resolved: bool,
}

#[derive(Debug, Clone, Default)]
pub struct IdentityMap {
    aliases: HashMap<String, String>,
}

#[derive(Deserialize)]
struct AliasRow {
    alias: String,
    developer: String,
}

impl IdentityMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Maps `alias` (an email, name or login) to the canonical `developer` key.
    pub fn insert(&mut self, alias: &str, developer: &str) {
        self.aliases
            .insert(normalize(alias), developer.trim().to_string());
    }

    /// Reads a CSV alias file with header `alias,developer`; `#` lines are comments.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut map = Self::new();
        for row in rdr.deserialize::<AliasRow>() {
            let row = row?;
            if row.alias.is_empty() || row.developer.is_empty() {
                return Err(Error::Format("alias file row with empty field".into()));
            }
            map.insert(&row.alias, &row.developer);
        }
        Ok(map)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(f)
    }

    pub fn len(&self) -> usize {
        self.aliases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aliases.is_empty()
    }

    pub fn resolve_author(&self, name: &str, email: &str) -> Resolution {
        let email = normalize(email);
        if !email.is_empty() {
            if let Some(k) = self.aliases.get(&email) {
                return Resolution {
                    key: k.clone(),
                    resolved: true,
                };
            }
        }
        if let Some(k) = self.aliases.get(&normalize(name)) {
            return Resolution {
                key: k.clone(),
                resolved: true,
            };
        }
        let key = if email.is_empty() {
            name.trim().to_string()
        } else {
            email
        };
        Resolution {
            key,
            resolved: false,
        }
    }

    pub fn resolve_actor(&self, login: &str) -> Resolution {
        match self.aliases.get(&normalize(login)) {
            Some(k) => Resolution {
                key: k.clone(),
                resolved: true,
            },
            None => Resolution {
                key: login.trim().to_string(),
                resolved: false,
            },
        }
    }
}

fn normalize(s: &str) -> String {
    s.trim().to_lowercase()
}
