//! Flat `key = value` config files and flag/config/default resolution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde_json::Value;

use crate::fail::{CliError, CliResult};

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; keys may use `-` or `_` interchangeably.
pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::input(format!("config line {}: expected key = value", k + 1)))?;
        let key = normalise(key.trim());
        if key.is_empty() {
            return Err(CliError::input(format!("config line {}: empty key", k + 1)));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::input(format!("config line {}: duplicate key '{key}'", k + 1)));
        }
    }
    Ok(out)
}

fn normalise(key: &str) -> String {
    key.replace('_', "-").to_ascii_lowercase()
}

/// Resolves each setting from its flag, then the config file, then the
/// default, recording the value used.
pub struct Resolver {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    effective: BTreeMap<String, Value>,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::io(format!("reading config {}: {e}", p.display())))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        Ok(Self {
            file,
            used: BTreeSet::new(),
            effective: BTreeMap::new(),
        })
    }

    fn from_file<T: FromStr>(&mut self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        self.used.insert(key.to_string());
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| CliError::input(format!("config key '{key}' = '{raw}': {e}"))),
        }
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T>
    where
        T: FromStr + Into<Value> + Clone,
        T::Err: Display,
    {
        self.used.insert(key.to_string());
        let v = match flag {
            Some(v) => v,
            None => self.from_file(key)?.unwrap_or(default),
        };
        self.effective.insert(key.to_string(), v.clone().into());
        Ok(v)
    }

    pub fn opt<T>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>>
    where
        T: FromStr + Into<Value> + Clone,
        T::Err: Display,
    {
        self.used.insert(key.to_string());
        let v = match flag {
            Some(v) => Some(v),
            None => self.from_file(key)?,
        };
        self.effective
            .insert(key.to_string(), v.clone().map(Into::into).unwrap_or(Value::Null));
        Ok(v)
    }

    /// Boolean switch: on if the flag is given or the config says `true`.
    pub fn switch(&mut self, key: &str, flag: bool) -> CliResult<bool> {
        let v = flag || self.from_file::<bool>(key)?.unwrap_or(false);
        self.effective.insert(key.to_string(), v.into());
        Ok(v)
    }

    /// Fails on config keys that no setting of this command consumed.
    pub fn finish(&mut self) -> CliResult<BTreeMap<String, Value>> {
        let unknown: Vec<&String> = self.file.keys().filter(|k| !self.used.contains(*k)).collect();
        if !unknown.is_empty() {
            let names: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
            return Err(CliError::input(format!("unknown config keys: {}", names.join(", "))));
        }
        Ok(self.effective.clone())
    }
}
