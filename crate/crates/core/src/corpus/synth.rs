use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng as _, SeedableRng};
use rayon::prelude::*;

use super::protocol::{write_protocol, ProtocolEntry};
use super::wav::write_wav;
use super::Label;
use crate::error::{Error, Result};
use crate::features::Waveform;
use crate::nn::Rng;

const ENVIRONMENTS: usize = 3;
const PLAYBACK_DEVICES: usize = 4;
const RECORDING_DEVICES: usize = 4;
const SPEAKERS: usize = 10;
const PHRASES: usize = 10;
const GENUINE_SNR_DB: f64 = 20.0;
/// File numbering starts well clear of the ids on the default blacklist.
const FIRST_FILE_NUMBER: usize = 2_000_001;

/// Parameters of the synthetic genuine/replay corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub genuine: usize,
    pub spoof: usize,
    pub min_seconds: f64,
    pub max_seconds: f64,
    pub sample_rate: u32,
    /// Nominal corner of the replay channel's first-order low-pass.
    pub cutoff_hz: f64,
    /// Standard deviation of the white noise the replay channel adds.
    pub noise_level: f64,
    pub gain_min: f64,
    pub gain_max: f64,
    /// Drive of the `tanh` soft clipper; larger is harsher.
    pub clip_drive: f64,
    pub seed: u64,
    /// Prefix of the generated file ids, e.g. `T_`.
    pub id_prefix: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            genuine: 200,
            spoof: 200,
            min_seconds: 1.0,
            max_seconds: 2.5,
            sample_rate: 16_000,
            cutoff_hz: 2_500.0,
            noise_level: 0.004,
            gain_min: 0.5,
            gain_max: 1.0,
            clip_drive: 1.5,
            seed: 0,
            id_prefix: "T_".into(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.genuine == 0 || self.spoof == 0 {
            return Err(Error::config("both class counts must be positive"));
        }
        if !(self.min_seconds > 0.0 && self.max_seconds >= self.min_seconds && self.max_seconds.is_finite()) {
            return Err(Error::config("duration range must satisfy 0 < min <= max"));
        }
        if self.sample_rate == 0 {
            return Err(Error::config("sample rate must be positive"));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if !(self.cutoff_hz > 0.0 && self.cutoff_hz < nyquist) {
            return Err(Error::config(format!("cutoff must lie in (0, {nyquist}) Hz")));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return Err(Error::config("noise level must be non-negative"));
        }
        if !(self.gain_min > 0.0 && self.gain_max >= self.gain_min && self.gain_max <= 1.0) {
            return Err(Error::config("gain range must satisfy 0 < min <= max <= 1"));
        }
        if !(self.clip_drive > 0.0 && self.clip_drive.is_finite()) {
            return Err(Error::config("clip drive must be positive"));
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.genuine + self.spoof
    }
}

/// SplitMix64 finaliser over `(seed, index)`; used to give every file and
/// every pipeline stage its own independent stream.
pub fn file_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn scale_to_peak(x: &mut [f64], peak: f64) {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m > 0.0 {
        x.iter_mut().for_each(|v| *v *= peak / m);
    }
}

/// White noise through a three-pole approximation of a 1/f spectrum.
fn pink_noise(n: usize, rng: &mut Rng) -> Vec<f64> {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    (0..n)
        .map(|_| {
            let w = rng.random::<f64>() * 2.0 - 1.0;
            b0 = 0.99765 * b0 + w * 0.0990460;
            b1 = 0.96300 * b1 + w * 0.2965164;
            b2 = 0.57000 * b2 + w * 1.0526913;
            b0 + b1 + b2 + w * 0.1848
        })
        .collect()
}

/// A few harmonics of a slowly wandering pitch under a syllabic envelope,
/// plus pink noise 20 dB down.
fn genuine_style(n: usize, sample_rate: f64, rng: &mut Rng) -> Vec<f64> {
    let f0 = rng.random_range(100.0..250.0);
    let max_harmonic = ((0.45 * sample_rate / f0) as usize).clamp(5, 40);
    let count = rng.random_range(3..=5);
    let mut harmonics: Vec<usize> = Vec::with_capacity(count);
    while harmonics.len() < count {
        let h = rng.random_range(1..=max_harmonic);
        if !harmonics.contains(&h) {
            harmonics.push(h);
        }
    }
    let partials: Vec<(f64, f64, f64)> =
        harmonics.iter().map(|&h| (h as f64, rng.random_range(0.2..1.0), rng.random_range(0.0..TAU))).collect();
    let vibrato_rate = rng.random_range(3.0..7.0);
    let syllable_rate = rng.random_range(2.0..6.0);
    let syllable_phase = rng.random_range(0.0..TAU);

    let mut phase = 0.0;
    let mut voiced: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate;
            let env = 0.6 + 0.4 * (TAU * syllable_rate * t + syllable_phase).sin();
            let s = partials.iter().map(|&(h, a, p)| a * (h * phase + p).sin()).sum::<f64>();
            phase += TAU * f0 * (1.0 + 0.02 * (TAU * vibrato_rate * t).sin()) / sample_rate;
            env * s
        })
        .collect();

    let noise = pink_noise(n, rng);
    let noise_gain = rms(&voiced) / (rms(&noise) * 10f64.powf(GENUINE_SNR_DB / 20.0));
    voiced.iter_mut().zip(&noise).for_each(|(v, w)| *v += noise_gain * w);
    voiced
}

/// Device-dependent replay: low-pass, soft clip, additive noise.
fn replay_channel(x: &mut [f64], cfg: &SynthConfig, playback: usize, recording: usize, rng: &mut Rng) {
    let cutoff = cfg.cutoff_hz * (0.8 + 0.1 * playback as f64);
    let a = 1.0 - (-TAU * cutoff / cfg.sample_rate as f64).exp();
    let mut y = 0.0;
    for v in x.iter_mut() {
        y += a * (*v - y);
        *v = y;
    }
    scale_to_peak(x, 1.0);
    let norm = cfg.clip_drive.tanh();
    x.iter_mut().for_each(|v| *v = (cfg.clip_drive * *v).tanh() / norm);
    let noise = cfg.noise_level * (1.0 + 0.25 * recording as f64);
    // Box-Muller keeps this dependent on `rand` alone.
    for v in x.iter_mut() {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        *v += noise * (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos();
    }
}

/// File `index` of the corpus: genuine for `index < cfg.genuine`, spoof
/// afterwards. A pure function of `(cfg, index)`.
pub fn synthesize_utterance(cfg: &SynthConfig, index: usize) -> Result<(Waveform<f64>, ProtocolEntry)> {
    let mut rng = Rng::seed_from_u64(file_seed(cfg.seed, index as u64));
    let label = if index < cfg.genuine { Label::Genuine } else { Label::Spoof };
    let sr = cfg.sample_rate as f64;
    let seconds = if cfg.max_seconds > cfg.min_seconds {
        rng.random_range(cfg.min_seconds..cfg.max_seconds)
    } else {
        cfg.min_seconds
    };
    let n = ((seconds * sr).round() as usize).max(1);
    let mut x = genuine_style(n, sr, &mut rng);

    let mut entry = ProtocolEntry::new(format!("{}{}.wav", cfg.id_prefix, FIRST_FILE_NUMBER + index), label);
    entry.speaker = format!("M{:04}", index % SPEAKERS + 1);
    entry.phrase = format!("S{:02}", index % PHRASES + 1);
    let peak = rng.random_range(cfg.gain_min..=cfg.gain_max) * 0.9;
    if label == Label::Spoof {
        let env = rng.random_range(0..ENVIRONMENTS);
        let playback = rng.random_range(0..PLAYBACK_DEVICES);
        let recording = rng.random_range(0..RECORDING_DEVICES);
        replay_channel(&mut x, cfg, playback, recording, &mut rng);
        entry.environment = format!("E{:02}", env + 1);
        entry.playback = format!("P{:02}", playback + 1);
        entry.recording = format!("R{:02}", recording + 1);
        x.iter_mut().for_each(|v| *v *= peak);
    } else {
        scale_to_peak(&mut x, peak);
    }
    Ok((Waveform::new(x, cfg.sample_rate)?, entry))
}

/// Writes every utterance as 16-bit WAV into `dir` plus `dir/protocol.txt`.
pub fn generate_synthetic_corpus(cfg: &SynthConfig, dir: &Path) -> Result<Vec<ProtocolEntry>> {
    cfg.validate()?;
    std::fs::create_dir_all(dir)?;
    let entries = (0..cfg.total())
        .into_par_iter()
        .map(|i| {
            let (w, entry) = synthesize_utterance(cfg, i)?;
            write_wav(&dir.join(&entry.file_id), &w)?;
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    write_protocol(&dir.join("protocol.txt"), &entries)?;
    Ok(entries)
}
