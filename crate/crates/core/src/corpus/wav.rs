use std::path::Path;

use crate::error::{Error, Result};
use crate::features::Waveform;
use crate::scalar::Real;

/// Reads 16-bit signed PCM mono, scaling samples by 1/32768.
pub fn read_wav<F: Real>(path: &Path) -> Result<Waveform<F>> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::format(
            path,
            format!(
                "expected 16-bit PCM mono, got {} channel(s) of {}-bit {:?}",
                spec.channels, spec.bits_per_sample, spec.sample_format
            ),
        ));
    }
    let scale = F::of(1.0 / 32768.0);
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| F::of(v as f64) * scale))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Waveform::new(samples, spec.sample_rate).map_err(|e| match e {
        Error::EmptyWaveform => Error::format(path, "no samples"),
        e => e,
    })
}

/// Writes 16-bit PCM mono, rounding and saturating to the i16 range.
pub fn write_wav<F: Real>(path: &Path, w: &Waveform<F>) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for s in w.samples() {
        let v = (s.as_f64() * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v)?;
    }
    writer.finalize()?;
    Ok(())
}
