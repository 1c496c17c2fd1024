//! Replay-spoofing detection: log-power spectrogram features with split-data
//! windowing, a compact max-feature-map CNN trained with Adam and early
//! stopping, LLR scoring, a Gaussian back-end and EER evaluation.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the pipeline to `f64`.

pub mod corpus;
pub mod error;
pub mod experiment;
pub mod features;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod scalar;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Waveform = features::Waveform<f64>;
pub type Spectrogram = features::Spectrogram<f64>;
pub type NormStats = features::NormStats<f64>;
pub type Tensor = nn::Tensor<f64>;
pub type AdamState = nn::AdamState<f64>;
pub type Network = model::Network<f64>;
pub type LabeledExample = train::LabeledExample<f64>;
pub type GaussianBackend = metrics::GaussianBackend<f64>;

pub type Tensor32 = nn::Tensor<f32>;
pub type Network32 = model::Network<f32>;
