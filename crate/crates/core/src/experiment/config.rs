//! Flat `key = value` settings with `#` comments.
//!
//! Keys are the long CLI flag names; `_` and `-` are interchangeable. Later
//! layers override earlier ones, so command-line values win over a file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("line {}: expected `key = value`", n + 1)))?;
            let key = normalize(key);
            if key.is_empty() {
                return Err(Error::invalid(format!("line {}: empty key", n + 1)));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::invalid(format!("line {}: duplicate key {key:?}", n + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.values.insert(normalize(key), value.to_string());
    }

    /// Copies every entry of `other` over this one.
    pub fn overlay(&mut self, other: &Settings) {
        self.values.extend(other.values.iter().map(|(k, v)| (k.clone(), v.clone())));
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(&normalize(key))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::invalid(format!("{key} = {v:?}: {e}"))))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.get(key)?.ok_or_else(|| Error::invalid(format!("missing required setting {key}")))
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<T>().map_err(|e| Error::invalid(format!("{key}: {s:?}: {e}"))))
                    .collect()
            })
            .transpose()
    }

    /// Only the entries whose keys are in `keys`.
    pub fn subset(&self, keys: &[&str]) -> Settings {
        let wanted: Vec<String> = keys.iter().map(|k| normalize(k)).collect();
        Settings {
            values: self
                .values
                .iter()
                .filter(|(k, _)| wanted.contains(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Errors on any key outside `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        match self.values.keys().find(|k| !known.iter().any(|n| normalize(n) == **k)) {
            Some(k) => Err(Error::invalid(format!("unknown setting {k:?}"))),
            None => Ok(()),
        }
    }

    /// Canonical `key = value` text, sorted by key.
    pub fn render(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
