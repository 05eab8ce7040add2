//! Flat `key = value` configuration files.
//!
//! One assignment per line; `#` starts a comment; blank lines are ignored.
//! Values given on the command line with `--set key=value` override the
//! file. Every key must be consumed by the command reading it, otherwise the
//! whole configuration is rejected with the offending keys listed.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

fn split_assignment(s: &str) -> Option<(String, String)> {
    let (k, v) = s.split_once('=')?;
    let k = k.trim();
    if k.is_empty() || k.contains(char::is_whitespace) {
        return None;
    }
    Some((k.to_owned(), v.trim().to_owned()))
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = split_assignment(line)
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value, got {raw:?}", i + 1)))?;
            if entries.insert(k.clone(), v).is_some() {
                return Err(CliError::Config(format!("line {}: key {k:?} set twice", i + 1)));
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_owned(), value.into());
    }

    /// Applies `key=value` overrides.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, sets: &[S]) -> Result<()> {
        for s in sets {
            let (k, v) = split_assignment(s.as_ref())
                .ok_or_else(|| CliError::Config(format!("override {:?} is not key=value", s.as_ref())))?;
            self.entries.insert(k, v);
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn reader(&self) -> Fields<'_> {
        Fields { kv: self, used: BTreeSet::new(), problems: Vec::new() }
    }
}

/// Typed, tracked access to a [`KeyValues`]. Problems accumulate and are
/// reported together by [`Fields::finish`].
#[derive(Debug)]
pub struct Fields<'a> {
    kv: &'a KeyValues,
    used: BTreeSet<String>,
    problems: Vec<String>,
}

impl Fields<'_> {
    pub fn str(&mut self, key: &str) -> Option<String> {
        self.used.insert(key.to_owned());
        self.kv.get(key).map(str::to_owned)
    }

    pub fn parse_with<T>(&mut self, key: &str, f: impl FnOnce(&str) -> std::result::Result<T, String>) -> Option<T> {
        let raw = self.str(key)?;
        match f(&raw) {
            Ok(v) => Some(v),
            Err(e) => {
                self.problems.push(format!("{key} = {raw:?}: {e}"));
                None
            }
        }
    }

    pub fn opt<T: FromStr>(&mut self, key: &str) -> Option<T>
    where
        T::Err: std::fmt::Display,
    {
        self.parse_with(key, |s| s.parse::<T>().map_err(|e| e.to_string()))
    }

    pub fn or<T: FromStr>(&mut self, key: &str, default: T) -> T
    where
        T::Err: std::fmt::Display,
    {
        self.opt(key).unwrap_or(default)
    }

    pub fn required(&mut self, key: &str) -> Option<String> {
        let v = self.str(key);
        if v.is_none() {
            self.problems.push(format!("{key}: required"));
        }
        v
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&mut self, key: &str) -> Option<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.parse_with(key, |s| {
            s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(|t| t.parse::<T>().map_err(|e| format!("{t:?}: {e}"))).collect()
        })
    }

    pub fn problem(&mut self, msg: impl Into<String>) {
        self.problems.push(msg.into());
    }

    pub fn finish(self) -> Result<()> {
        let mut problems = self.problems;
        let unknown: Vec<&String> = self.kv.entries.keys().filter(|k| !self.used.contains(*k)).collect();
        if !unknown.is_empty() {
            problems.push(format!("unknown keys: {}", unknown.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(", ")));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems.join("; ")))
        }
    }
}

pub fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_comments_and_overrides() {
        let mut kv = KeyValues::parse("# header\nn_trees = 10\n\nseed=3 # inline\n").unwrap();
        kv.apply_overrides(&["seed=4"]).unwrap();
        let mut f = kv.reader();
        assert_eq!(f.or("n_trees", 0usize), 10);
        assert_eq!(f.or("seed", 0u64), 4);
        assert_eq!(f.or("missing", 7u32), 7);
        f.finish().unwrap();
    }

    #[test]
    fn unknown_and_bad_keys_are_listed() {
        let kv = KeyValues::parse("n_trees = ten\ncolour = blue\nflavour = x\n").unwrap();
        let mut f = kv.reader();
        let _ = f.opt::<usize>("n_trees");
        let msg = f.finish().unwrap_err().to_string();
        assert!(msg.contains("n_trees") && msg.contains("colour, flavour"), "{msg}");
    }

    #[test]
    fn malformed_lines() {
        assert!(KeyValues::parse("just words\n").is_err());
        assert!(KeyValues::parse("a = 1\na = 2\n").is_err());
        assert!(KeyValues::default().clone().apply_overrides(&["novalue"]).is_err());
    }

    #[test]
    fn lists() {
        let kv = KeyValues::parse("methods = rf, r_pls\nhs = 1,2.5\n").unwrap();
        let mut f = kv.reader();
        assert_eq!(f.list::<String>("methods").unwrap(), vec!["rf", "r_pls"]);
        assert_eq!(f.list::<f64>("hs").unwrap(), vec![1.0, 2.5]);
        f.finish().unwrap();
    }
}
