//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated; integer lists also accept inclusive ranges `a..b`.
//! Entries supplied on the command line carry line number 0.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "workers",
    "out",
    "svg",
    "msq_denominator",
    "sets",
    "q",
    "per_factor",
    "l",
    "cells",
    "loading_modes",
    "n",
    "reps",
    "target",
    "data",
    "rotation",
    "set",
    "step",
    "max_iter",
    "tol",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl ConfigValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ConfigValues::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(Error::Config {
                    line,
                    key: trimmed.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            let key = key.trim();
            if cfg.entries.contains_key(key) {
                return Err(Error::Config {
                    line,
                    key: key.to_string(),
                    message: "duplicate key".into(),
                });
            }
            cfg.insert(line, key, value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies a `key=value` override, replacing any file entry.
    pub fn set_param(&mut self, param: &str) -> Result<()> {
        let Some((key, value)) = param.split_once('=') else {
            return Err(Error::Config {
                line: 0,
                key: param.to_string(),
                message: "expected `key=value`".into(),
            });
        };
        self.insert(0, key.trim(), value.trim())
    }

    fn insert(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Config {
                line,
                key: key.to_string(),
                message: "unknown key".into(),
            });
        }
        if value.is_empty() {
            return Err(Error::Config {
                line,
                key: key.to_string(),
                message: "empty value".into(),
            });
        }
        self.entries.insert(key.to_string(), (line, value.to_string()));
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn error(&self, key: &str, message: String) -> Error {
        let line = self.entries.get(key).map_or(0, |e| e.0);
        Error::Config {
            line,
            key: key.to_string(),
            message,
        }
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.1.as_str())
    }

    /// Parses a scalar with `FromStr`.
    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get_str(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| self.error(key, format!("cannot parse `{v}`"))),
        }
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.get_str(key) {
            None => Ok(None),
            Some("true" | "yes" | "1") => Ok(Some(true)),
            Some("false" | "no" | "0") => Ok(Some(false)),
            Some(v) => Err(self.error(key, format!("`{v}` is not a boolean"))),
        }
    }

    /// Comma-separated list, each item mapped by `f`.
    pub fn get_list<T>(&self, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<Vec<T>>> {
        let Some(v) = self.get_str(key) else { return Ok(None) };
        let mut out = Vec::new();
        for item in v.split(',') {
            let item = item.trim();
            out.push(f(item).ok_or_else(|| self.error(key, format!("cannot parse `{item}`")))?);
        }
        Ok(Some(out))
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get_list(key, |s| s.parse::<f64>().ok().filter(|x| x.is_finite()))
    }

    pub fn get_usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        let Some(v) = self.get_str(key) else { return Ok(None) };
        let mut out = Vec::new();
        for item in v.split(',') {
            let item = item.trim();
            let bad = || self.error(key, format!("cannot parse `{item}`"));
            if let Some((a, b)) = item.split_once("..") {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if b < a || b - a > 10_000 {
                    return Err(bad());
                }
                out.extend(a..=b);
            } else {
                out.push(item.parse().map_err(|_| bad())?);
            }
        }
        Ok(Some(out))
    }
}
