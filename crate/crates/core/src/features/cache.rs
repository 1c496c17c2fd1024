//! Binary feature cache (`SPG1`) and normalization statistics (`NRM1`).
//!
//! `SPG1`: magic, then `count`, `frames`, `bins` as `u32` LE, then
//! `count * frames * bins` row-major `f32` LE values.
//! `NRM1`: magic, `bins` as `u32` LE, then `bins` means and `bins` standard
//! deviations as `f64` LE.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::normalize::NormStats;
use super::spectrogram::Spectrogram;
use crate::error::{Error, Result};
use crate::scalar::Real;

const SPG_MAGIC: &[u8; 4] = b"SPG1";
const NRM_MAGIC: &[u8; 4] = b"NRM1";

pub fn write_feature_cache<F: Real>(path: &Path, splits: &[Spectrogram<F>]) -> Result<()> {
    let (frames, bins) = splits.first().map_or((0, 0), |s| s.shape());
    if splits.iter().any(|s| s.shape() != (frames, bins)) {
        return Err(Error::shape("feature cache splits must share one shape"));
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(SPG_MAGIC)?;
    for v in [splits.len(), frames, bins] {
        out.write_all(&u32_le(v)?)?;
    }
    for s in splits {
        for v in s.values() {
            out.write_all(&(v.as_f64() as f32).to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_feature_cache<F: Real>(path: &Path, frame_hop_seconds: f64) -> Result<Vec<Spectrogram<F>>> {
    let bytes = fs::read(path)?;
    let mut r = Reader { bytes: &bytes, pos: 0, path };
    r.magic(SPG_MAGIC)?;
    let count = r.u32()? as usize;
    let frames = r.u32()? as usize;
    let bins = r.u32()? as usize;
    let per = frames * bins;
    let mut splits = Vec::with_capacity(count);
    for _ in 0..count {
        let raw = r.take(per * 4)?;
        let values = raw.chunks_exact(4).map(|c| F::of(f32::from_le_bytes(c.try_into().unwrap()) as f64)).collect();
        splits.push(Spectrogram::new(values, frames, bins, frame_hop_seconds)?);
    }
    r.finish()?;
    Ok(splits)
}

pub fn write_norm_stats<F: Real>(path: &Path, stats: &NormStats<F>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(NRM_MAGIC)?;
    out.write_all(&u32_le(stats.bins())?)?;
    for v in stats.mean.iter().chain(&stats.std) {
        out.write_all(&v.as_f64().to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_norm_stats<F: Real>(path: &Path) -> Result<NormStats<F>> {
    let bytes = fs::read(path)?;
    let mut r = Reader { bytes: &bytes, pos: 0, path };
    r.magic(NRM_MAGIC)?;
    let bins = r.u32()? as usize;
    let mut read = |n: usize| -> Result<Vec<F>> { (0..n).map(|_| r.f64().map(F::of)).collect() };
    let mean = read(bins)?;
    let std = read(bins)?;
    r.finish()?;
    Ok(NormStats { mean, std })
}

pub(crate) fn u32_le(v: usize) -> Result<[u8; 4]> {
    u32::try_from(v).map(u32::to_le_bytes).map_err(|_| Error::config(format!("{v} does not fit in 32 bits")))
}

/// Little-endian cursor over an in-memory file.
pub(crate) struct Reader<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
    pub path: &'a Path,
}

impl<'a> Reader<'a> {
    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format(self.path, format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        if self.take(4)? != magic {
            return Err(Error::format(self.path, format!("expected magic {:?}", String::from_utf8_lossy(magic))));
        }
        Ok(())
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::format(self.path, format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}
