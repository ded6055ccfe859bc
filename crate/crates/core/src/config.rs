//! Flat `key = value` configuration files.
//!
//! One entry per line; `#` starts a comment line; keys may repeat only where
//! a consumer explicitly accepts lists. Every key must be consumed, so a
//! typo surfaces as an error naming the key and its line.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlatConfig {
    entries: BTreeMap<String, Entry>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<FlatConfig> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (k, v) = trimmed.split_once('=').ok_or_else(|| {
                Error::config(format!("line {line}: expected `key = value`, got `{trimmed}`"))
            })?;
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::config(format!("line {line}: empty key")));
            }
            let entry = Entry {
                value: v.trim().to_owned(),
                line,
            };
            if let Some(prev) = entries.insert(key.to_owned(), entry) {
                return Err(Error::config(format!(
                    "line {line}: key `{key}` already set on line {}",
                    prev.line
                )));
            }
        }
        Ok(FlatConfig { entries })
    }

    /// Sets or replaces a key; used to layer command-line flags on top.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(
            key.to_owned(),
            Entry {
                value: value.into(),
                line: 0,
            },
        );
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Removes and returns a raw value.
    pub fn take_raw(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|e| e.value)
    }

    /// Removes and parses a value; parse failures name the key and line.
    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|err| {
                Error::config(format!("{}{key}: {err}", origin(e.line)))
            }),
        }
    }

    /// Removes every key under `prefix.` and returns `(suffix, value)` in
    /// key order.
    pub fn take_prefixed(&mut self, prefix: &str) -> Vec<(String, String)> {
        let dotted = format!("{prefix}.");
        let keys: Vec<String> = self
            .entries
            .keys()
            .filter(|k| k.starts_with(&dotted))
            .cloned()
            .collect();
        keys.into_iter()
            .map(|k| {
                let e = self.entries.remove(&k).expect("listed key");
                (k[dotted.len()..].to_owned(), e.value)
            })
            .collect()
    }

    /// Errors on the first unconsumed key.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, e)) => Err(Error::config(format!("{}unknown key `{k}`", origin(e.line)))),
        }
    }
}

fn origin(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!("line {line}: ")
    }
}
