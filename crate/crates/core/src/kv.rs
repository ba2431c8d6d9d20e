//! Flat `key = value` config files.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Every key
//! must be consumed by the reader; [`KeyValues::finish`] rejects leftovers so
//! that misspelled keys never fall back to silent defaults.

use crate::error::{Error, Result};
use std::str::FromStr;

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    used: bool,
}

#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: Vec<Entry>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<Entry> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                Error::config(content, format!("line {line}: expected `key = value`"))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::config("", format!("line {line}: empty key")));
            }
            if entries.iter().any(|e| e.key == key) {
                return Err(Error::config(key, format!("line {line}: duplicate key")));
            }
            entries.push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line,
                used: false,
            });
        }
        Ok(KeyValues { entries })
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::parse(&text)
    }

    /// Inserts or replaces a key, e.g. for command-line overrides.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.entries.iter_mut().find(|e| e.key == key) {
            Some(e) => e.value = value,
            None => self.entries.push(Entry {
                key: key.to_string(),
                value,
                line: 0,
                used: false,
            }),
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.iter().any(|e| e.key == key)
    }

    /// Consumes a key; a second take of the same key returns `None`.
    pub fn take_str(&mut self, key: &str) -> Option<String> {
        self.entries.iter_mut().find(|e| e.key == key && !e.used).map(|e| {
            e.used = true;
            e.value.clone()
        })
    }

    pub fn require_str(&mut self, key: &str) -> Result<String> {
        self.take_str(key)
            .ok_or_else(|| Error::config(key, "missing required key"))
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take_str(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.take(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.take(key)?
            .ok_or_else(|| Error::config(key, "missing required key"))
    }

    /// Whitespace- or comma-separated list.
    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take_str(key) {
            None => Ok(None),
            Some(v) => {
                let items = v
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<T>()
                            .map_err(|e| Error::config(key, format!("cannot parse `{s}`: {e}")))
                    })
                    .collect::<Result<Vec<T>>>()?;
                if items.is_empty() {
                    return Err(Error::config(key, "empty list"));
                }
                Ok(Some(items))
            }
        }
    }

    /// Fails on the first key (in file order) nobody consumed.
    pub fn finish(&self) -> Result<()> {
        match self.entries.iter().filter(|e| !e.used).min_by_key(|e| e.line) {
            Some(e) if e.line > 0 => Err(Error::config(
                e.key.clone(),
                format!("line {}: unknown key", e.line),
            )),
            Some(e) => Err(Error::config(e.key.clone(), "unknown key")),
            None => Ok(()),
        }
    }
}
