//! Line-oriented `key = value` text files.
//!
//! Used for schemas, encoding specs, synthetic-data specs, fitted linear
//! models, network files and search spaces. `#` starts a comment; blank lines
//! are ignored; keys may repeat and keep their file order.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct KvFile {
    name: String,
    entries: Vec<Entry>,
}

impl KvFile {
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let name = name.into();
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config {
                    file: name,
                    line: idx + 1,
                    message: format!("expected 'key = value', found '{line}'"),
                });
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config {
                    file: name,
                    line: idx + 1,
                    message: "empty key".into(),
                });
            }
            entries.push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line: idx + 1,
            });
        }
        Ok(Self { name, entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(path.display().to_string(), &text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn require(&self, key: &str) -> Result<&Entry> {
        self.get(key).ok_or_else(|| Error::Config {
            file: self.name.clone(),
            line: 0,
            message: format!("missing key '{key}'"),
        })
    }

    pub fn error(&self, entry: &Entry, message: impl Into<String>) -> Error {
        Error::Config {
            file: self.name.clone(),
            line: entry.line,
            message: format!("{}: {}", entry.key, message.into()),
        }
    }

    pub fn parse_value<V: FromStr>(&self, entry: &Entry) -> Result<V> {
        entry
            .value
            .parse()
            .map_err(|_| self.error(entry, format!("cannot parse '{}'", entry.value)))
    }

    pub fn parse_required<V: FromStr>(&self, key: &str) -> Result<V> {
        self.parse_value(self.require(key)?)
    }

    pub fn parse_or<V: FromStr>(&self, key: &str, default: V) -> Result<V> {
        match self.get(key) {
            Some(entry) => self.parse_value(entry),
            None => Ok(default),
        }
    }

    /// Comma-separated list value.
    pub fn parse_list<V: FromStr>(&self, entry: &Entry) -> Result<Vec<V>> {
        split_list(&entry.value)
            .map(|item| {
                item.parse()
                    .map_err(|_| self.error(entry, format!("cannot parse list item '{item}'")))
            })
            .collect()
    }
}

pub fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Accumulates `key = value` lines.
#[derive(Debug, Default)]
pub struct KvWriter {
    out: String,
}

impl KvWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.out, "# {text}");
        self
    }

    pub fn put(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.out, "{key} = {value}");
        self
    }

    pub fn put_list<V: std::fmt::Display>(&mut self, key: &str, values: &[V]) -> &mut Self {
        let joined = values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        self.put(key, joined)
    }

    pub fn finish(self) -> String {
        self.out
    }
}
