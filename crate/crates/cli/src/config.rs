//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Keys use the long flag names
//! with `_` or `-`. A value set on the command line wins over the file, which
//! wins over the built-in default.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::UsageError;

pub const KEYS: [&str; 16] = [
    "confidence",
    "days",
    "eps",
    "eta",
    "iq_threshold",
    "language",
    "lexicon",
    "max_gap",
    "max_iterations",
    "min_samples",
    "min_state_support",
    "min_support",
    "mode",
    "scenario",
    "sessions_per_day",
    "top",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, UsageError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(UsageError(format!("config line {}: expected key = value", n + 1)));
            };
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(UsageError(format!("config line {}: unknown key `{key}`", n + 1)));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(UsageError(format!("config line {}: duplicate key `{key}`", n + 1)));
            }
        }
        Ok(Self { values })
    }

    /// Flag value, else file value, else `default`.
    pub fn resolve<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, UsageError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(text) => text
                .parse()
                .map_err(|e| UsageError(format!("config key `{key}`: {e}"))),
            None => Ok(default),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}
