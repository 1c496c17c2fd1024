use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::Label;
use crate::error::{Error, Result};

/// One scored trial; higher scores favour genuine.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialScore {
    pub id: String,
    pub score: f64,
    pub label: Option<Label>,
}

/// Writes `id<TAB>score`, or `id<TAB>label<TAB>score` for labelled trials.
/// Scores use Rust's shortest round-trip decimal form, so reading them back
/// is exact.
pub fn write_scores(path: &Path, scores: &[TrialScore]) -> Result<()> {
    let mut out = String::new();
    for t in scores {
        if !t.score.is_finite() {
            return Err(Error::NonFinite(format!("score of {}", t.id)));
        }
        match t.label {
            Some(label) => writeln!(out, "{}\t{}\t{}", t.id, label, t.score),
            None => writeln!(out, "{}\t{}", t.id, t.score),
        }
        .expect("writing to a String");
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_scores(path: &Path) -> Result<Vec<TrialScore>> {
    let text = fs::read_to_string(path)?;
    let mut scores = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::parse(path, i + 1, msg);
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let (id, label, score) = match fields[..] {
            [id, score] => (id, None, score),
            [id, label, score] => (id, Some(label.parse::<Label>().map_err(|e| err(e.to_string()))?), score),
            _ => return Err(err(format!("expected 2 or 3 tab-separated fields, got {}", fields.len()))),
        };
        if id.is_empty() {
            return Err(err("empty trial id".into()));
        }
        let score: f64 = score.parse().map_err(|_| err(format!("bad score '{score}'")))?;
        if !score.is_finite() {
            return Err(err(format!("non-finite score '{score}'")));
        }
        scores.push(TrialScore { id: id.to_string(), score, label });
    }
    Ok(scores)
}
