//! Flat `key = value` configuration text. `#` starts a comment line.

use std::collections::BTreeMap;
use std::str::FromStr;

use super::IoError;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigMap {
    context: String,
    entries: BTreeMap<String, (usize, String)>,
}

/// Parses `text`, rejecting keys outside `allowed` and repeated keys.
pub fn parse_config(context: &str, text: &str, allowed: &[&str]) -> Result<ConfigMap, IoError> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| IoError::parse(context, n, "expected key = value"))?;
        let (k, v) = (k.trim(), v.trim());
        if !allowed.contains(&k) {
            return Err(IoError::UnknownKey { context: context.into(), line: n, key: k.into() });
        }
        if entries.insert(k.to_string(), (n, v.to_string())).is_some() {
            return Err(IoError::parse(context, n, format!("duplicate key {k:?}")));
        }
    }
    Ok(ConfigMap { context: context.into(), entries })
}

impl ConfigMap {
    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    /// Parsed value of `key`, if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, IoError>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((n, v)) => v.parse().map(Some).map_err(|e| IoError::parse(&self.context, *n, format!("{key}: {e}"))),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|k| k.as_str())
    }

    /// Canonical `key = value` lines in key order.
    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, (_, v))| format!("{k} = {v}\n")).collect()
    }
}
