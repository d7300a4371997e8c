//! Line-oriented `key = value` text, the format used for synth specs and
//! training configs.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may repeat;
//! callers decide whether that is allowed.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KvEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct KvFile {
    pub origin: PathBuf,
    pub entries: Vec<KvEntry>,
}

impl KvFile {
    pub fn parse(text: &str, origin: impl Into<PathBuf>) -> Result<Self> {
        let origin = origin.into();
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::format(&origin, format!("line {}: expected `key = value`", n + 1))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::format(&origin, format!("line {}: empty key", n + 1)));
            }
            entries.push(KvEntry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line: n + 1,
            });
        }
        Ok(KvFile { origin, entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Value of a single-valued key. Errors if the key appears more than once.
    pub fn get(&self, key: &str) -> Result<Option<&KvEntry>> {
        let mut found = self.entries.iter().filter(|e| e.key == key);
        let first = found.next();
        if let Some(dup) = found.next() {
            return Err(Error::format(
                &self.origin,
                format!("line {}: duplicate key {key:?}", dup.line),
            ));
        }
        Ok(first)
    }

    pub fn parse_value<T: FromStr>(&self, entry: &KvEntry) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        entry.value.parse::<T>().map_err(|e| {
            Error::format(
                &self.origin,
                format!("line {}: bad value for {:?}: {e}", entry.line, entry.key),
            )
        })
    }

    pub fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.map(|e| self.parse_value(e)).transpose()
    }

    pub fn required<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.optional(key)?
            .ok_or_else(|| Error::format(&self.origin, format!("missing key {key:?}")))
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a KvEntry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }

    /// Errors on any key outside `known`.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        match self
            .entries
            .iter()
            .find(|e| !known.contains(&e.key.as_str()))
        {
            Some(e) => Err(Error::format(
                &self.origin,
                format!("line {}: unknown key {:?}", e.line, e.key),
            )),
            None => Ok(()),
        }
    }
}
