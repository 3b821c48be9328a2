//! Flat `key = value` configuration files.
//!
//! ```text
//! # comment
//! model = wyner
//! p_db = 10        # trailing comments are allowed
//! k-users = inf
//! ```
//!
//! Keys are case-sensitive; `-` and `_` are interchangeable.  Blank lines and
//! text after `#` are ignored.  A key may appear only once.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{CliError, CliResult};

pub const KNOWN_KEYS: &[&str] = &[
    "model",
    "alpha",
    "p_db",
    "c_bits",
    "k_users",
    "channel",
    "protocol",
    "scheme",
    "cells",
    "trials",
    "seed",
    "out",
    "force_mc",
    "no_timing",
    "axis",
    "grid",
    "range",
    "search",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {lineno}: expected `key = value`")))?;
            let key = normalize(key);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("line {lineno}: unknown key `{key}`")));
            }
            let value = value.trim();
            if value.is_empty() {
                return Err(CliError::Config(format!(
                    "line {lineno}: empty value for `{key}`"
                )));
            }
            if entries.insert(key.clone(), value.to_string()).is_some() {
                return Err(CliError::Config(format!("line {lineno}: duplicate key `{key}`")));
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(&normalize(key)).map(String::as_str)
    }

    pub fn parsed<T>(&self, key: &str) -> CliResult<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Config(format!("`{key}` = `{v}`: {e}")))
            })
            .transpose()
    }

    pub fn flag(&self, key: &str) -> CliResult<bool> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(CliError::Config(format!(
                "`{key}` expects true or false, got `{v}`"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_dashes() {
        let cfg = ConfigFile::parse("# header\nmodel = sh\n\nk-users = inf # many\nalpha=0.3\n").unwrap();
        assert_eq!(cfg.get("model"), Some("sh"));
        assert_eq!(cfg.get("k_users"), Some("inf"));
        assert_eq!(cfg.parsed::<f64>("alpha").unwrap(), Some(0.3));
        assert_eq!(cfg.get("seed"), None);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(ConfigFile::parse("model wyner").is_err());
        assert!(ConfigFile::parse("colour = red").is_err());
        assert!(ConfigFile::parse("alpha = ").is_err());
        assert!(ConfigFile::parse("alpha = 1\nalpha = 2").is_err());
    }

    #[test]
    fn flags_and_bad_numbers() {
        let cfg = ConfigFile::parse("force_mc = yes\nalpha = x").unwrap();
        assert!(cfg.flag("force_mc").unwrap());
        assert!(!cfg.flag("no_timing").unwrap());
        assert!(cfg.parsed::<f64>("alpha").is_err());
    }
}
