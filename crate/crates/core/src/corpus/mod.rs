//! Protocol manifests (one labelled utterance per line), data hygiene, WAV I/O and a
//! deterministic synthetic genuine/replay corpus.

mod protocol;
mod synth;
mod wav;

use std::fmt;
use std::str::FromStr;

pub use protocol::{
    apply_blacklist, configuration_stats, parse_protocol, parse_protocol_str, trim_leading_zeros, write_protocol,
    ConfigStats, CorpusManifest, ProtocolEntry, Subset, DEFAULT_BLACKLIST, PLACEHOLDER,
};
pub use synth::{file_seed, generate_synthetic_corpus, synthesize_utterance, SynthConfig};
pub use wav::{read_wav, write_wav};

use crate::error::{Error, Result};

/// Class of a trial. Genuine is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Spoof,
    Genuine,
}

impl Label {
    /// Output unit of the network: spoof 0, genuine 1.
    pub fn class_index(self) -> usize {
        match self {
            Label::Spoof => 0,
            Label::Genuine => 1,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Spoof => Label::Genuine,
            Label::Genuine => Label::Spoof,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Spoof => "spoof",
            Label::Genuine => "genuine",
        })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("genuine") {
            Ok(Label::Genuine)
        } else if s.eq_ignore_ascii_case("spoof") {
            Ok(Label::Spoof)
        } else {
            Err(Error::config(format!("unknown label '{s}'")))
        }
    }
}
