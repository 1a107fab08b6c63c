//! Flat `key=value` documents.
//!
//! One entry per line, `#` starts a comment line, blank lines are ignored.
//! Keys keep their insertion order when written back out so resolved
//! configs diff cleanly.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::{IoError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDocument {
    entries: Vec<(String, String)>,
}

impl KvDocument {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(IoError::Parse { line: i + 1, msg: format!("expected key=value, got {line:?}") });
            };
            let key = k.trim();
            if key.is_empty() {
                return Err(IoError::Parse { line: i + 1, msg: "empty key".into() });
            }
            if doc.get(key).is_some() {
                return Err(IoError::Parse { line: i + 1, msg: format!("duplicate key `{key}`") });
            }
            doc.entries.push((key.to_string(), v.trim().to_string()));
        }
        Ok(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }

    /// Insert or overwrite, keeping the original position of an existing key.
    pub fn set(&mut self, key: &str, value: impl Display) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| IoError::MissingKey(key.to_string()))
    }

    /// Parse the value under `key`; `Ok(None)` when the key is absent.
    pub fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| IoError::BadValue { key: key.to_string(), value: v.to_string() }),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl std::fmt::Display for KvDocument {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_blanks_and_whitespace() {
        let doc = KvDocument::parse("# hdr\n\n a = 1 \nb=two=2\n").unwrap();
        assert_eq!(doc.get("a"), Some("1"));
        assert_eq!(doc.get("b"), Some("two=2"));
        assert_eq!(doc.len(), 2);
    }

    #[test]
    fn rejects_garbage_and_duplicates() {
        assert!(KvDocument::parse("novalue\n").is_err());
        assert!(KvDocument::parse("=3\n").is_err());
        assert!(KvDocument::parse("a=1\na=2\n").is_err());
    }

    #[test]
    fn typed_values() {
        let doc = KvDocument::parse("n=5\nx=abc").unwrap();
        assert_eq!(doc.parse_value::<usize>("n").unwrap(), Some(5));
        assert_eq!(doc.parse_value::<usize>("missing").unwrap(), None);
        assert!(doc.parse_value::<usize>("x").is_err());
    }

    #[test]
    fn set_keeps_order_and_display_roundtrips() {
        let mut doc = KvDocument::new();
        doc.set("z", 1);
        doc.set("a", 2);
        doc.set("z", 3);
        assert_eq!(doc.to_string(), "z=3\na=2\n");
        assert_eq!(KvDocument::parse(&doc.to_string()).unwrap(), doc);
    }
}
