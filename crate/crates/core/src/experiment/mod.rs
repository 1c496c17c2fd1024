//! Experiment configuration files and the featurize → train → score → EER
//! pipeline shared by the command-line tool and the tests.

mod config;
mod kv;
mod pipeline;

pub use config::{
    stage_seed, Backend, CorpusSpec, ExperimentConfig, FeatureConfig, ModelChoice, Paths, Representation, Stage,
    DEFAULT_SINGLE_SECONDS,
};
pub use kv::{KvDoc, KvWriter};
pub use pipeline::{
    apply_norm, eer_of, embed_example, featurize_manifest, featurize_waveform, fit_gaussian_backend, fit_norm,
    format_eer, format_epoch_logs, format_sweep_table, load_experiment_sets, load_manifest, load_network,
    read_feature_dir, run_sweep, score_examples, score_examples_gaussian, train_experiment, write_feature_dir,
    FeatureSet, RunFiles, SweepAxis, SweepRow, CHECKPOINT_FILE, EPOCH_LOG_FILE, FEATURES_FILE, MODEL_FILE,
    PROTOCOL_FILE, RUN_FILE,
};

use std::path::Path;

use crate::corpus::{generate_synthetic_corpus, ProtocolEntry};
use crate::error::Result;

/// Writes `out/train` and `out/dev`, each with WAVs and a `protocol.txt`.
pub fn generate_corpus(spec: &CorpusSpec, out: &Path) -> Result<(Vec<ProtocolEntry>, Vec<ProtocolEntry>)> {
    let train = generate_synthetic_corpus(&spec.subset(false), &out.join("train"))?;
    let dev = generate_synthetic_corpus(&spec.subset(true), &out.join("dev"))?;
    Ok((train, dev))
}
