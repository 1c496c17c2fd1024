//! `[section]` headers followed by `key = value` lines; `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::{Display, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Value {
    text: String,
    line: usize,
}

/// A parsed document whose keys are consumed by typed getters; whatever is
/// left over when [`KvDoc::finish`] runs is reported as unknown.
#[derive(Debug, Clone)]
pub struct KvDoc {
    path: PathBuf,
    sections: BTreeMap<String, BTreeMap<String, Value>>,
}

impl KvDoc {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, Value>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::parse(path, i + 1, "unterminated section header"))?
                    .trim();
                if name.is_empty() {
                    return Err(Error::parse(path, i + 1, "empty section name"));
                }
                sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::parse(path, i + 1, "expected 'key = value'"))?;
            let section = current.as_ref().ok_or_else(|| Error::parse(path, i + 1, "key outside any section"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::parse(path, i + 1, "empty key"));
            }
            let value = Value { text: value.trim().to_string(), line: i + 1 };
            if sections.get_mut(section).expect("section exists").insert(key.to_string(), value).is_some() {
                return Err(Error::parse(path, i + 1, format!("duplicate key '{key}' in [{section}]")));
            }
        }
        Ok(KvDoc { path: path.to_path_buf(), sections })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn has(&self, section: &str, key: &str) -> bool {
        self.sections.get(section).is_some_and(|s| s.contains_key(key))
    }

    /// Removes and parses a key, reporting the line on failure.
    pub fn take<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        let Some(v) = self.sections.get_mut(section).and_then(|s| s.remove(key)) else {
            return Ok(None);
        };
        v.text.parse().map(Some).map_err(|e| Error::parse(&self.path, v.line, format!("{section}.{key}: {e}")))
    }

    pub fn take_or<T: FromStr>(&mut self, section: &str, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.take(section, key)?.unwrap_or(default))
    }

    pub fn take_flag(&mut self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.take::<String>(section, key)? {
            None => Ok(default),
            Some(v) => parse_flag(&v).ok_or_else(|| {
                Error::config(format!("{}: {section}.{key} must be yes or no, got '{v}'", self.path.display()))
            }),
        }
    }

    /// Fails on any key no getter consumed.
    pub fn finish(self) -> Result<()> {
        for (section, keys) in &self.sections {
            if let Some((key, v)) = keys.iter().min_by_key(|(_, v)| v.line) {
                return Err(Error::parse(&self.path, v.line, format!("unknown key '{key}' in [{section}]")));
            }
        }
        Ok(())
    }
}

pub fn parse_flag(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "yes" | "true" | "on" | "1" => Some(true),
        "no" | "false" | "off" | "0" => Some(false),
        _ => None,
    }
}

pub fn flag(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Builds a document section by section.
#[derive(Debug, Default)]
pub struct KvWriter {
    out: String,
}

impl KvWriter {
    pub fn section(&mut self, name: &str) -> &mut Self {
        if !self.out.is_empty() {
            self.out.push('\n');
        }
        writeln!(self.out, "[{name}]").expect("writing to a String");
        self
    }

    pub fn key(&mut self, key: &str, value: impl Display) -> &mut Self {
        writeln!(self.out, "{key} = {value}").expect("writing to a String");
        self
    }

    pub fn finish(self) -> String {
        self.out
    }
}
