//! Flat `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment line, blank lines are
//! skipped. Every key a subcommand understands is read through the typed
//! getters below; after a run has pulled its keys, `finish` rejects
//! whatever is left over, so misspelled or misplaced keys fail loudly
//! instead of silently using a default.

use anyhow::{bail, Context, Result};
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

pub struct Config {
    entries: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {}: expected `key = value`, got `{line}`", lineno + 1);
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                bail!("config line {}: empty key", lineno + 1);
            }
            if entries.insert(key.clone(), value).is_some() {
                bail!("config line {}: duplicate key `{key}`", lineno + 1);
            }
        }
        Ok(Config {
            entries,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        let v = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(v.as_str())
    }

    pub fn str_opt(&self, key: &str) -> Option<String> {
        self.raw(key).map(|s| s.to_string())
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    pub fn require_str(&self, key: &str) -> Result<String> {
        self.str_opt(key)
            .with_context(|| format!("config key `{key}` is required"))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .with_context(|| format!("config key `{key}`: `{v}` is not a number")),
        }
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => Ok(Some(v.parse().with_context(|| {
                format!("config key `{key}`: `{v}` is not a number")
            })?)),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .with_context(|| format!("config key `{key}`: `{v}` is not a count")),
        }
    }

    pub fn u64_opt(&self, key: &str) -> Result<Option<u64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => Ok(Some(v.parse().with_context(|| {
                format!("config key `{key}`: `{v}` is not an unsigned integer")
            })?)),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => bail!("config key `{key}`: `{v}` is not `true`/`false`"),
        }
    }

    /// Comma-separated floats.
    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .with_context(|| format!("config key `{key}`: `{s}` is not a number"))
                })
                .collect(),
        }
    }

    /// Semicolon-separated `wx,wy` integer pairs (one per real component),
    /// e.g. `1,0;0,-2`.
    pub fn winding_opt(&self, key: &str) -> Result<Option<Vec<[i64; 2]>>> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for pair in v.split(';') {
            let Some((a, b)) = pair.split_once(',') else {
                bail!("config key `{key}`: `{pair}` is not a `wx,wy` pair");
            };
            let parse = |s: &str| -> Result<i64> {
                s.trim()
                    .parse()
                    .with_context(|| format!("config key `{key}`: `{s}` is not an integer"))
            };
            out.push([parse(a)?, parse(b)?]);
        }
        Ok(Some(out))
    }

    /// Rejects keys that no getter consumed.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&String> = self
            .entries
            .keys()
            .filter(|k| !used.contains(*k))
            .collect();
        if !unknown.is_empty() {
            let list = unknown
                .iter()
                .map(|s| format!("`{s}`"))
                .collect::<Vec<_>>()
                .join(", ");
            bail!("unknown config keys for this subcommand: {list}");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_unknowns() {
        let c = Config::parse("# comment\nnx = 8\n\namplitude = 1e-2\n").unwrap();
        assert_eq!(c.usize_or("nx", 4).unwrap(), 8);
        assert_eq!(c.f64_or("amplitude", 0.0).unwrap(), 1e-2);
        c.finish().unwrap();

        let c = Config::parse("nx = 8\nhello = 1\n").unwrap();
        c.usize_or("nx", 4).unwrap();
        let err = c.finish().unwrap_err().to_string();
        assert!(err.contains("`hello`"), "{err}");
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("just words\n").is_err());
        assert!(Config::parse("a = 1\na = 2\n").is_err());
        let c = Config::parse("flag = maybe\n").unwrap();
        assert!(c.bool_or("flag", false).is_err());
    }

    #[test]
    fn parses_lists_and_windings() {
        let c = Config::parse("ladder = 1e-1, 1e-2,1e-3\nwinding = 1,0;0,-2\n").unwrap();
        assert_eq!(
            c.f64_list_or("ladder", &[]).unwrap(),
            vec![0.1, 0.01, 0.001]
        );
        assert_eq!(
            c.winding_opt("winding").unwrap().unwrap(),
            vec![[1, 0], [0, -2]]
        );
        c.finish().unwrap();
    }
}
