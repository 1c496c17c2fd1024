use super::spectrogram::Spectrogram;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Window length and shift, both in frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitConfig {
    pub spec_wind: usize,
    pub wind_shift: usize,
}

impl Default for SplitConfig {
    /// One-second windows with a one-second shift at a 10 ms hop.
    fn default() -> Self {
        SplitConfig { spec_wind: 100, wind_shift: 100 }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.spec_wind == 0 || self.wind_shift == 0 {
            return Err(Error::config("split window and shift must be positive"));
        }
        if self.wind_shift > self.spec_wind {
            return Err(Error::config(format!("split shift {} exceeds window {}", self.wind_shift, self.spec_wind)));
        }
        Ok(())
    }
}

/// Number of full windows that fit in `frames`; `None` when not even one does.
pub fn split_count(frames: usize, cfg: &SplitConfig) -> Option<usize> {
    (frames >= cfg.spec_wind).then(|| (frames - cfg.spec_wind) / cfg.wind_shift + 1)
}

/// Slides a `spec_wind`-frame window by `wind_shift` frames; trailing frames
/// that cannot fill a window are dropped.
pub fn split_spectrogram<F: Real>(spec: &Spectrogram<F>, cfg: &SplitConfig) -> Result<Vec<Spectrogram<F>>> {
    cfg.validate()?;
    let k = split_count(spec.frames(), cfg).ok_or_else(|| {
        Error::shape(format!("{} frames cannot hold a {}-frame window", spec.frames(), cfg.spec_wind))
    })?;
    Ok((0..k).map(|i| spec.frame_range(i * cfg.wind_shift, cfg.spec_wind)).collect())
}
