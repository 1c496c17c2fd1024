use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::waveform::{Waveform, DEFAULT_SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_LOG_FLOOR: f64 = 1e-10;

/// Framing and transform settings for [`log_power_spectrogram`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrogramConfig {
    pub fft_size: usize,
    pub window_size: usize,
    pub hop: usize,
    pub log_floor: f64,
    /// Inputs at any other rate are rejected; there is no resampling.
    pub sample_rate: u32,
}

impl Default for SpectrogramConfig {
    /// 256-point FFT, 256-sample window, 10 ms hop at 16 kHz: 100×129 per second.
    fn default() -> Self {
        SpectrogramConfig {
            fft_size: 256,
            window_size: 256,
            hop: 160,
            log_floor: DEFAULT_LOG_FLOOR,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

impl SpectrogramConfig {
    pub fn with_fft(fft_size: usize) -> Self {
        SpectrogramConfig { fft_size, window_size: fft_size, ..Self::default() }
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.fft_size == 0 || self.window_size == 0 {
            return Err(Error::config("fft and window sizes must be positive"));
        }
        if self.window_size > self.fft_size {
            return Err(Error::config(format!("window {} exceeds fft size {}", self.window_size, self.fft_size)));
        }
        if self.hop == 0 {
            return Err(Error::config("hop must be positive"));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::config("log floor must be positive"));
        }
        Ok(())
    }
}

/// A frames × bins matrix of (log-power) values, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<F> {
    values: Vec<F>,
    frames: usize,
    bins: usize,
    pub frame_hop_seconds: f64,
}

impl<F: Real> Spectrogram<F> {
    pub fn new(values: Vec<F>, frames: usize, bins: usize, frame_hop_seconds: f64) -> Result<Self> {
        if values.len() != frames * bins {
            return Err(Error::shape(format!("{} values for a {frames}x{bins} spectrogram", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spectrogram entry".into()));
        }
        Ok(Spectrogram { values, frames, bins, frame_hop_seconds })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.frames, self.bins)
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[F] {
        &self.values[t * self.bins..(t + 1) * self.bins]
    }

    pub fn get(&self, t: usize, f: usize) -> F {
        self.values[t * self.bins + f]
    }

    /// Frames `[start, start + len)` as a new spectrogram.
    pub fn frame_range(&self, start: usize, len: usize) -> Spectrogram<F> {
        Spectrogram {
            values: self.values[start * self.bins..(start + len) * self.bins].to_vec(),
            frames: len,
            bins: self.bins,
            frame_hop_seconds: self.frame_hop_seconds,
        }
    }

    pub(crate) fn map_values(&self, mut f: impl FnMut(usize, F) -> F) -> Spectrogram<F> {
        let bins = self.bins;
        let values = self.values.iter().enumerate().map(|(i, &v)| f(i % bins, v)).collect();
        Spectrogram { values, frames: self.frames, bins: self.bins, frame_hop_seconds: self.frame_hop_seconds }
    }
}

fn periodic_hann<F: Real>(n: usize) -> Vec<F> {
    let two_pi = 2.0 * std::f64::consts::PI;
    (0..n).map(|i| F::of(0.5 - 0.5 * (two_pi * i as f64 / n as f64).cos())).collect()
}

/// `ln(|STFT|² + log_floor)` with a periodic Hann window.
///
/// Produces `floor(len / hop)` frames; frame `t` starts at sample `t * hop`
/// and is zero-padded past the end of the signal.
pub fn log_power_spectrogram<F: Real>(w: &Waveform<F>, cfg: &SpectrogramConfig) -> Result<Spectrogram<F>> {
    cfg.validate()?;
    if w.sample_rate() != cfg.sample_rate {
        return Err(Error::SampleRate { found: w.sample_rate(), expected: cfg.sample_rate });
    }
    if w.len() < cfg.window_size {
        return Err(Error::WaveformTooShort { len: w.len(), window: cfg.window_size });
    }

    let frames = w.len() / cfg.hop;
    let bins = cfg.bins();
    let window = periodic_hann::<F>(cfg.window_size);
    let fft = FftPlanner::<F>::new().plan_fft_forward(cfg.fft_size);
    let floor = F::of(cfg.log_floor);
    let samples = w.samples();

    let mut buf = vec![Complex::new(F::zero(), F::zero()); cfg.fft_size];
    let mut scratch = vec![Complex::new(F::zero(), F::zero()); fft.get_inplace_scratch_len()];
    let mut values = Vec::with_capacity(frames * bins);
    for t in 0..frames {
        let start = t * cfg.hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            let x = if i < cfg.window_size {
                samples.get(start + i).map_or(F::zero(), |&s| s * window[i])
            } else {
                F::zero()
            };
            *slot = Complex::new(x, F::zero());
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        values.extend(buf[..bins].iter().map(|c| (c.norm_sqr() + floor).ln()));
    }
    let hop_seconds = cfg.hop as f64 / cfg.sample_rate as f64;
    Spectrogram::new(values, frames, bins, hop_seconds)
}
