//! `key = value` configuration files with flag overrides.
//!
//! ```
//! use digraf::config::{Config, KeySpec};
//!
//! const KEYS: &[KeySpec] = &[KeySpec::new("lr", "0.01", "learning rate")];
//! let cfg = Config::parse("lr = 0.1  # faster\n", &[("lr".into(), "0.001".into())], KEYS).unwrap();
//! assert_eq!(cfg.f64("lr").unwrap(), 0.001);
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::error::{Error, Result};

/// Where a value came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Default,
    Line(usize),
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Default => f.write_str("default"),
            Source::Line(l) => write!(f, "line {l}"),
            Source::Flag => f.write_str("command line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { key: String, origin: Source },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    DuplicateKey { key: String, line: usize, first: usize },
    #[error("{origin}: cannot parse `{value}` for key `{key}` as {expected}")]
    Value {
        key: String,
        value: String,
        origin: Source,
        expected: &'static str,
    },
}

/// A documented key with its default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeySpec {
    pub name: &'static str,
    pub default: &'static str,
    pub doc: &'static str,
}

impl KeySpec {
    pub const fn new(name: &'static str, default: &'static str, doc: &'static str) -> Self {
        Self { name, default, doc }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    value: String,
    source: Source,
}

/// Resolved configuration: every key in the schema has a value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<&'static str, Entry>,
}

fn lookup(schema: &[KeySpec], key: &str, source: Source) -> Result<&'static str, ConfigError> {
    schema
        .iter()
        .find(|k| k.name == key)
        .map(|k| k.name)
        .ok_or_else(|| ConfigError::UnknownKey {
            key: key.to_string(),
            origin: source,
        })
}

impl Config {
    /// All defaults.
    pub fn defaults(schema: &[KeySpec]) -> Self {
        Self {
            entries: schema
                .iter()
                .map(|k| {
                    (
                        k.name,
                        Entry {
                            value: k.default.to_string(),
                            source: Source::Default,
                        },
                    )
                })
                .collect(),
        }
    }

    /// Parses file text, then applies `overrides` on top.
    pub fn parse(text: &str, overrides: &[(String, String)], schema: &[KeySpec]) -> Result<Self, ConfigError> {
        let mut cfg = Self::defaults(schema);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: raw.trim().to_string(),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(ConfigError::Syntax {
                    line,
                    text: raw.trim().to_string(),
                });
            }
            let name = lookup(schema, k, Source::Line(line))?;
            let entry = cfg.entries.get_mut(name).expect("schema key present");
            if let Source::Line(first) = entry.source {
                return Err(ConfigError::DuplicateKey {
                    key: k.to_string(),
                    line,
                    first,
                });
            }
            *entry = Entry {
                value: v.to_string(),
                source: Source::Line(line),
            };
        }
        for (k, v) in overrides {
            let name = lookup(schema, k, Source::Flag)?;
            cfg.entries.insert(
                name,
                Entry {
                    value: v.clone(),
                    source: Source::Flag,
                },
            );
        }
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[(String, String)], schema: &[KeySpec]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        Ok(Self::parse(&text, overrides, schema)?)
    }

    pub fn raw(&self, key: &str) -> Result<&str, ConfigError> {
        self.entries
            .get(key)
            .map(|e| e.value.as_str())
            .ok_or_else(|| ConfigError::UnknownKey {
                key: key.to_string(),
                origin: Source::Default,
            })
    }

    pub fn source(&self, key: &str) -> Option<&Source> {
        self.entries.get(key).map(|e| &e.source)
    }

    fn typed<T: FromStr>(&self, key: &str, expected: &'static str) -> Result<T, ConfigError> {
        let raw = self.raw(key)?;
        raw.parse().map_err(|_| ConfigError::Value {
            key: key.to_string(),
            value: raw.to_string(),
            origin: self.entries[key].source.clone(),
            expected,
        })
    }

    pub fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.typed(key, "a real number")
    }

    pub fn usize(&self, key: &str) -> Result<usize, ConfigError> {
        self.typed(key, "a non-negative integer")
    }

    pub fn u64(&self, key: &str) -> Result<u64, ConfigError> {
        self.typed(key, "a non-negative integer")
    }

    pub fn bool(&self, key: &str) -> Result<bool, ConfigError> {
        self.typed(key, "true or false")
    }

    /// Parses with the value type's own `FromStr`, reporting failures as config errors.
    pub fn parsed<T: FromStr>(&self, key: &str, expected: &'static str) -> Result<T, ConfigError> {
        self.typed(key, expected)
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str, expected: &'static str) -> Result<Vec<T>, ConfigError> {
        let raw = self.raw(key)?;
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|_| ConfigError::Value {
                    key: key.to_string(),
                    value: raw.to_string(),
                    origin: self.entries[key].source.clone(),
                    expected,
                })
            })
            .collect()
    }

    /// Resolved values, for echoing into `run.json`.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .map(|(k, e)| (k.to_string(), e.value.clone()))
            .collect()
    }
}
