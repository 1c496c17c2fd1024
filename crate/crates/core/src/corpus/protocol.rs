use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::Label;
use crate::error::{Error, Result};
use crate::features::Waveform;
use crate::scalar::Real;

pub const PLACEHOLDER: &str = "-";

/// Files of the original training set that contain no speech.
pub const DEFAULT_BLACKLIST: [&str; 2] = ["T_1001658.wav", "T_1000150.wav"];

/// `file label speaker phrase environment playback recording`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolEntry {
    pub file_id: String,
    pub label: Label,
    pub speaker: String,
    pub phrase: String,
    pub environment: String,
    pub playback: String,
    pub recording: String,
}

impl ProtocolEntry {
    pub fn new(file_id: impl Into<String>, label: Label) -> Self {
        ProtocolEntry {
            file_id: file_id.into(),
            label,
            speaker: PLACEHOLDER.into(),
            phrase: PLACEHOLDER.into(),
            environment: PLACEHOLDER.into(),
            playback: PLACEHOLDER.into(),
            recording: PLACEHOLDER.into(),
        }
    }

    /// `"Exx Pyy Rzz"`.
    pub fn configuration(&self) -> String {
        format!("{} {} {}", self.environment, self.playback, self.recording)
    }

    /// File id with any extension removed, used to name derived files.
    pub fn stem(&self) -> &str {
        Path::new(&self.file_id).file_stem().and_then(|s| s.to_str()).unwrap_or(&self.file_id)
    }
}

pub fn parse_protocol_str(text: &str, path: &Path) -> Result<Vec<ProtocolEntry>> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 2 {
            return Err(Error::parse(path, i + 1, "expected at least file id and label"));
        }
        if fields.len() > 7 {
            return Err(Error::parse(path, i + 1, format!("expected at most 7 fields, got {}", fields.len())));
        }
        let label = fields[1]
            .parse::<Label>()
            .map_err(|_| Error::parse(path, i + 1, format!("unknown label '{}'", fields[1])))?;
        let field = |k: usize| fields.get(k).copied().unwrap_or(PLACEHOLDER).to_string();
        entries.push(ProtocolEntry {
            file_id: fields[0].to_string(),
            label,
            speaker: field(2),
            phrase: field(3),
            environment: field(4),
            playback: field(5),
            recording: field(6),
        });
    }
    Ok(entries)
}

pub fn parse_protocol(path: &Path) -> Result<Vec<ProtocolEntry>> {
    parse_protocol_str(&std::fs::read_to_string(path)?, path)
}

pub fn write_protocol(path: &Path, entries: &[ProtocolEntry]) -> Result<()> {
    let mut out = String::new();
    for e in entries {
        writeln!(
            out,
            "{} {} {} {} {} {} {}",
            e.file_id, e.label, e.speaker, e.phrase, e.environment, e.playback, e.recording
        )
        .expect("writing to a String");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Drops blacklisted file ids, keeping the order of the rest.
pub fn apply_blacklist<S: AsRef<str>>(entries: Vec<ProtocolEntry>, blacklist: &[S]) -> Vec<ProtocolEntry> {
    let banned: HashSet<&str> = blacklist.iter().map(AsRef::as_ref).collect();
    entries.into_iter().filter(|e| !banned.contains(e.file_id.as_str())).collect()
}

/// Removes the exactly-zero prefix. An all-zero signal keeps one sample.
pub fn trim_leading_zeros<F: Real>(w: &Waveform<F>, enabled: bool) -> Waveform<F> {
    if !enabled {
        return w.clone();
    }
    let start = w.samples().iter().position(|s| !s.is_zero()).unwrap_or(w.len() - 1);
    Waveform::new(w.samples()[start..].to_vec(), w.sample_rate()).expect("non-empty finite slice")
}

/// Counts over spoofed entries only.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigStats {
    pub environment: BTreeMap<String, usize>,
    pub playback: BTreeMap<String, usize>,
    pub recording: BTreeMap<String, usize>,
    pub configuration: BTreeMap<String, usize>,
}

impl ConfigStats {
    pub fn spoof_total(&self) -> usize {
        self.configuration.values().sum()
    }
}

pub fn configuration_stats(entries: &[ProtocolEntry]) -> ConfigStats {
    let mut st = ConfigStats::default();
    for e in entries.iter().filter(|e| e.label == Label::Spoof) {
        *st.environment.entry(e.environment.clone()).or_default() += 1;
        *st.playback.entry(e.playback.clone()).or_default() += 1;
        *st.recording.entry(e.recording.clone()).or_default() += 1;
        *st.configuration.entry(e.configuration()).or_default() += 1;
    }
    st
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    Train,
    Dev,
    Eval,
}

impl FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Subset::Train),
            "dev" => Ok(Subset::Dev),
            "eval" => Ok(Subset::Eval),
            other => Err(Error::config(format!("unknown subset '{other}'"))),
        }
    }
}

/// A protocol file plus the directory its audio lives in.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub subset: Subset,
    pub entries: Vec<ProtocolEntry>,
    pub audio_root: PathBuf,
}

impl CorpusManifest {
    pub fn new(subset: Subset, entries: Vec<ProtocolEntry>, audio_root: PathBuf) -> Result<Self> {
        let mut seen = HashSet::new();
        if let Some(dup) = entries.iter().find(|e| !seen.insert(e.file_id.as_str())) {
            return Err(Error::config(format!("duplicate file id {}", dup.file_id)));
        }
        Ok(CorpusManifest { subset, entries, audio_root })
    }

    /// Loads a protocol; the audio root defaults to the protocol's directory.
    pub fn load(subset: Subset, protocol: &Path, audio_root: Option<&Path>) -> Result<Self> {
        let entries = parse_protocol(protocol)?;
        let root = match audio_root {
            Some(r) => r.to_path_buf(),
            None => protocol.parent().map(Path::to_path_buf).unwrap_or_default(),
        };
        Self::new(subset, entries, root)
    }

    pub fn audio_path(&self, entry: &ProtocolEntry) -> PathBuf {
        self.audio_root.join(&entry.file_id)
    }

    pub fn counts(&self) -> (usize, usize) {
        let genuine = self.entries.iter().filter(|e| e.label == Label::Genuine).count();
        (genuine, self.entries.len() - genuine)
    }
}
