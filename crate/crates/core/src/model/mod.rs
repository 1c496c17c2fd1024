//! Declarative CNN family. [`model3_default`] is the compact 7682-parameter
//! MFM network; other members are expressed as user-written configs.

mod config;
mod network;

pub use config::{
    count_params, model3_default, shape_trace, Activation, FeatureShape, LayerSpec, ModelConfig, TraceRow, MODEL3_INPUT,
};
pub use network::{ForwardTrace, Network};
