//! `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every experiment
//! declares its parameters with defaults; unknown keys are rejected and the
//! resolved set, defaults included, is echoed into the summary.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                bail!("line {}: empty key", i + 1);
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                bail!("line {}: duplicate key `{k}`", i + 1);
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), value);
    }

    /// Fills in defaults and rejects keys the experiment does not know.
    pub fn resolve(&self, defaults: &[(&str, &str)]) -> Result<Params> {
        for k in self.entries.keys() {
            if !defaults.iter().any(|(d, _)| d == k) {
                let known: Vec<&str> = defaults.iter().map(|(d, _)| *d).collect();
                bail!("unknown config key `{k}` (expected one of: {})", known.join(", "));
            }
        }
        let values = defaults
            .iter()
            .map(|&(k, v)| (k.to_string(), self.entries.get(k).cloned().unwrap_or_else(|| v.to_string())))
            .collect();
        Ok(Params { values })
    }
}

/// Resolved parameters of one experiment.
#[derive(Clone, Debug)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn str(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("parameter `{key}` not declared"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.str(key);
        v.parse().map_err(|e| anyhow!("config `{key} = {v}`: {e}"))
    }

    /// Comma-separated list; empty string gives an empty list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.str(key);
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| anyhow!("config `{key}` item `{s}`: {e}")))
            .collect()
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.str(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => bail!("config `{key} = {v}`: expected true or false"),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.values.iter().map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone()))).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves() {
        let raw = RawConfig::parse("# comment\n n = 64 \n\nfamily=zipf:1.2\n").unwrap();
        let p = raw.resolve(&[("n", "8"), ("family", "zipf"), ("m", "100")]).unwrap();
        assert_eq!(p.get::<u32>("n").unwrap(), 64);
        assert_eq!(p.str("family"), "zipf:1.2");
        assert_eq!(p.get::<usize>("m").unwrap(), 100);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RawConfig::parse("n 5").is_err());
        assert!(RawConfig::parse("n=1\nn=2").is_err());
        let raw = RawConfig::parse("bogus=1").unwrap();
        assert!(raw.resolve(&[("n", "8")]).is_err());
        let p = RawConfig::default().resolve(&[("n", "x")]).unwrap();
        assert!(p.get::<u32>("n").is_err());
    }

    #[test]
    fn lists() {
        let p = RawConfig::parse("e = 0.1, 0.5,1").unwrap().resolve(&[("e", "")]).unwrap();
        assert_eq!(p.list::<f64>("e").unwrap(), vec![0.1, 0.5, 1.0]);
    }
}
