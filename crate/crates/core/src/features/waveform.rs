use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Mono PCM audio with amplitudes nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<F> {
    samples: Vec<F>,
    sample_rate: u32,
}

impl<F: Real> Waveform<F> {
    pub fn new(samples: Vec<F>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyWaveform);
        }
        if sample_rate == 0 {
            return Err(Error::config("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i}")));
        }
        Ok(Waveform { samples, sample_rate })
    }

    pub fn samples(&self) -> &[F] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn into_samples(self) -> Vec<F> {
        self.samples
    }

    /// Truncates or cyclically repeats the signal to exactly `target` samples.
    fn resized_cyclic(&self, target: usize) -> Self {
        let samples = self.samples.iter().copied().cycle().take(target).collect();
        Waveform { samples, sample_rate: self.sample_rate }
    }
}

/// Extends a waveform to the next whole number of seconds by repeating it
/// cyclically from its start. Whole-second inputs are returned unchanged.
pub fn pad_or_truncate_whole_seconds<F: Real>(w: &Waveform<F>) -> Result<Waveform<F>> {
    if w.is_empty() {
        return Err(Error::EmptyWaveform);
    }
    let rate = w.sample_rate as usize;
    let target = w.len().div_ceil(rate) * rate;
    Ok(w.resized_cyclic(target))
}

/// Forces a waveform to `round(seconds * sample_rate)` samples: longer inputs
/// keep their first samples, shorter ones are repeated cyclically.
pub fn fix_length<F: Real>(w: &Waveform<F>, seconds: f64) -> Result<Waveform<F>> {
    if w.is_empty() {
        return Err(Error::EmptyWaveform);
    }
    if !(seconds > 0.0) || !seconds.is_finite() {
        return Err(Error::config(format!("target length must be positive, got {seconds} s")));
    }
    let target = (seconds * w.sample_rate as f64).round() as usize;
    if target == 0 {
        return Err(Error::config(format!("{seconds} s rounds to zero samples")));
    }
    Ok(w.resized_cyclic(target))
}
