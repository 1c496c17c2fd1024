//! Waveform conditioning, log-power spectrograms, normalization and the
//! split-data windowing that turns one utterance into several fixed-size
//! training samples.

mod cache;
mod normalize;
mod spectrogram;
mod split;
mod waveform;

pub use cache::{read_feature_cache, read_norm_stats, write_feature_cache, write_norm_stats};
pub(crate) use cache::{u32_le, Reader};
pub use normalize::{fit_normalizer, normalize, NormStats, STD_FLOOR};
pub use spectrogram::{log_power_spectrogram, Spectrogram, SpectrogramConfig, DEFAULT_LOG_FLOOR};
pub use split::{split_count, split_spectrogram, SplitConfig};
pub use waveform::{fix_length, pad_or_truncate_whole_seconds, Waveform, DEFAULT_SAMPLE_RATE};
