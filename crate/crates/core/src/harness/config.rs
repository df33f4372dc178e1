//! Flat `key = value` configuration with dotted keys.
//!
//! ```text
//! # comment
//! runs = 100
//! model.k = 3
//! ```
//!
//! Values are parsed on access against a per-experiment schema of defaults, so
//! a misspelled key is rejected instead of silently ignored.

use std::collections::BTreeMap;
use std::str::FromStr;

use super::HarnessError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected `key = value`, got `{raw}`", i + 1)))?;
            cfg.insert(k, v)?;
        }
        Ok(cfg)
    }

    fn insert(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let key = key.trim();
        let valid = !key.is_empty()
            && key.split('.').all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'));
        if !valid {
            return Err(HarnessError::Config(format!("invalid key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), HarnessError> {
        let (k, v) = kv.split_once('=').ok_or_else(|| HarnessError::Config(format!("override `{kv}` is not key=value")))?;
        self.insert(k, v)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }
}

/// A config resolved against a schema of `(key, default)` pairs.
#[derive(Debug, Clone)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn resolve(schema: &[(&str, &str)], config: &Config) -> Result<Self, HarnessError> {
        let mut values: BTreeMap<String, String> = schema.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        for (k, v) in config.entries() {
            if !values.contains_key(k) {
                let known: Vec<&str> = schema.iter().map(|(k, _)| *k).collect();
                return Err(HarnessError::Config(format!("unknown key `{k}`; valid keys: {}", known.join(", "))));
            }
            values.insert(k.clone(), v.clone());
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, HarnessError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.values.get(key).ok_or_else(|| HarnessError::Config(format!("missing key `{key}`")))?;
        raw.parse::<T>().map_err(|e| HarnessError::Config(format!("key `{key}` = `{raw}`: {e}")))
    }

    pub fn str(&self, key: &str) -> Result<&str, HarnessError> {
        self.values.get(key).map(String::as_str).ok_or_else(|| HarnessError::Config(format!("missing key `{key}`")))
    }

    /// Comma-separated list of reals; empty string gives an empty list.
    pub fn list(&self, key: &str) -> Result<Vec<f64>, HarnessError> {
        let raw = self.str(key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| HarnessError::Config(format!("key `{key}` entry `{s}`: {e}"))))
            .collect()
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves() {
        let mut cfg = Config::parse("# header\nruns = 5\nmodel.k=3 # trailing\n\n").unwrap();
        cfg.apply_override("runs=7").unwrap();
        let p = Params::resolve(&[("runs", "100"), ("model.k", "2"), ("tol", "1e-10")], &cfg).unwrap();
        assert_eq!(p.get::<usize>("runs").unwrap(), 7);
        assert_eq!(p.get::<usize>("model.k").unwrap(), 3);
        assert_eq!(p.get::<f64>("tol").unwrap(), 1e-10);
        assert!(Params::resolve(&[("runs", "1")], &cfg).is_err());
        assert!(Config::parse("novalue").is_err());
        assert!(Config::parse("a..b = 1").is_err());
        assert!(p.get::<usize>("tol").is_err());
    }

    #[test]
    fn lists() {
        let cfg = Config::parse("theta = 1, -2.5,3").unwrap();
        let p = Params::resolve(&[("theta", ""), ("empty", "")], &cfg).unwrap();
        assert_eq!(p.list("theta").unwrap(), vec![1.0, -2.5, 3.0]);
        assert!(p.list("empty").unwrap().is_empty());
    }
}
