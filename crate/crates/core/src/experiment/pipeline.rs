use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use super::config::{ExperimentConfig, FeatureConfig, Representation};
use crate::corpus::{
    apply_blacklist, read_wav, trim_leading_zeros, CorpusManifest, Label, ProtocolEntry, DEFAULT_BLACKLIST,
};
use crate::error::{Error, Result};
use crate::features::{
    fit_normalizer, fix_length, log_power_spectrogram, normalize, pad_or_truncate_whole_seconds, read_feature_cache,
    split_spectrogram, write_feature_cache, NormStats, Spectrogram, Waveform,
};
use crate::metrics::{eer, score_utterance, split_by_label, GaussianBackend, TrialScore};
use crate::model::{ModelConfig, Network};
use crate::nn::{read_checkpoint, Tensor};
use crate::train::{format_epoch_log, train_with_progress, EpochLog, LabeledExample, TrainOutcome};

pub const FEATURES_FILE: &str = "features.cfg";
pub const PROTOCOL_FILE: &str = "protocol.txt";
pub const CACHE_EXT: &str = "spg";
pub const MODEL_FILE: &str = "model.cfg";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const EPOCH_LOG_FILE: &str = "epochs.log";
pub const RUN_FILE: &str = "run.cfg";

/// Waveform → network inputs under one representation.
pub fn featurize_waveform(w: &Waveform<f64>, cfg: &FeatureConfig) -> Result<Vec<Spectrogram<f64>>> {
    let w = trim_leading_zeros(w, cfg.trim);
    match cfg.representation {
        Representation::Split(split) => {
            let spec = log_power_spectrogram(&pad_or_truncate_whole_seconds(&w)?, &cfg.spectrogram)?;
            split_spectrogram(&spec, &split)
        }
        Representation::Single { seconds } => {
            Ok(vec![log_power_spectrogram(&fix_length(&w, seconds)?, &cfg.spectrogram)?])
        }
    }
}

/// Loads a protocol, applying the blacklist if configured.
pub fn load_manifest(
    subset: crate::corpus::Subset,
    protocol: &Path,
    audio_root: Option<&Path>,
    cfg: &FeatureConfig,
) -> Result<CorpusManifest> {
    let mut m = CorpusManifest::load(subset, protocol, audio_root)?;
    if cfg.blacklist {
        m.entries = apply_blacklist(m.entries, &DEFAULT_BLACKLIST);
    }
    Ok(m)
}

/// Reads and featurizes every utterance of a manifest in parallel; output
/// order follows the manifest.
pub fn featurize_manifest(manifest: &CorpusManifest, cfg: &FeatureConfig) -> Result<Vec<LabeledExample<f64>>> {
    cfg.validate()?;
    if manifest.entries.is_empty() {
        return Err(Error::Empty("manifest has no entries"));
    }
    manifest
        .entries
        .par_iter()
        .map(|e| {
            let path = manifest.audio_path(e);
            let w = read_wav::<f64>(&path).map_err(|err| match err {
                Error::Wav(hound::Error::IoError(io)) => Error::format(&path, format!("cannot read audio: {io}")),
                err => err,
            })?;
            let splits = featurize_waveform(&w, cfg).map_err(|err| Error::format(&path, err.to_string()))?;
            LabeledExample::new(e.file_id.clone(), splits, e.label)
        })
        .collect()
}

/// Per-bin statistics over every split of every example.
pub fn fit_norm(examples: &[LabeledExample<f64>]) -> Result<NormStats<f64>> {
    fit_normalizer(examples.iter().flat_map(|e| e.splits.iter()))
}

pub fn apply_norm(examples: &mut [LabeledExample<f64>], stats: &NormStats<f64>) -> Result<()> {
    examples.par_iter_mut().try_for_each(|e| {
        for s in e.splits.iter_mut() {
            *s = normalize(s, stats)?;
        }
        Ok(())
    })
}

fn cache_name(entry: &ProtocolEntry) -> String {
    format!("{}.{CACHE_EXT}", entry.stem())
}

/// A directory of per-utterance caches plus the protocol and feature
/// settings that produced them.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub config: FeatureConfig,
    pub entries: Vec<ProtocolEntry>,
    pub examples: Vec<LabeledExample<f64>>,
}

pub fn write_feature_dir(
    dir: &Path,
    cfg: &FeatureConfig,
    entries: &[ProtocolEntry],
    examples: &[LabeledExample<f64>],
) -> Result<()> {
    if entries.len() != examples.len() {
        return Err(Error::shape("entries and examples differ in number"));
    }
    std::fs::create_dir_all(dir)?;
    entries
        .par_iter()
        .zip(examples)
        .try_for_each(|(e, ex)| write_feature_cache(&dir.join(cache_name(e)), &ex.splits))?;
    crate::corpus::write_protocol(&dir.join(PROTOCOL_FILE), entries)?;
    std::fs::write(dir.join(FEATURES_FILE), cfg.to_text())?;
    Ok(())
}

pub fn read_feature_dir(dir: &Path) -> Result<FeatureSet> {
    let cfg_path = dir.join(FEATURES_FILE);
    let config = FeatureConfig::parse(&std::fs::read_to_string(&cfg_path)?, &cfg_path)?;
    let entries = crate::corpus::parse_protocol(&dir.join(PROTOCOL_FILE))?;
    if entries.is_empty() {
        return Err(Error::Empty("feature directory lists no utterances"));
    }
    let hop_seconds = config.spectrogram.hop as f64 / config.spectrogram.sample_rate as f64;
    let examples = entries
        .par_iter()
        .map(|e| {
            let splits = read_feature_cache(&dir.join(cache_name(e)), hop_seconds)?;
            LabeledExample::new(e.file_id.clone(), splits, e.label)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureSet { config, entries, examples })
}

/// Train and dev examples of an experiment, normalized with statistics fit
/// on the training side only.
pub fn load_experiment_sets(cfg: &ExperimentConfig) -> Result<(Vec<LabeledExample<f64>>, Vec<LabeledExample<f64>>)> {
    use crate::corpus::Subset;
    let p = &cfg.paths;
    match (&p.train_protocol, &p.dev_protocol, &p.train_features, &p.dev_features) {
        (Some(tp), Some(dp), _, _) => {
            let train_m = load_manifest(Subset::Train, tp, p.train_audio.as_deref(), &cfg.features)?;
            let dev_m = load_manifest(Subset::Dev, dp, p.dev_audio.as_deref(), &cfg.features)?;
            let mut train = featurize_manifest(&train_m, &cfg.features)?;
            let mut dev = featurize_manifest(&dev_m, &cfg.features)?;
            let stats = fit_norm(&train)?;
            apply_norm(&mut train, &stats)?;
            apply_norm(&mut dev, &stats)?;
            Ok((train, dev))
        }
        (_, _, Some(tf), Some(df)) => {
            let train = read_feature_dir(tf)?;
            let dev = read_feature_dir(df)?;
            if train.config != cfg.features || dev.config != cfg.features {
                return Err(Error::config(
                    "feature directories were built with settings that differ from the experiment",
                ));
            }
            Ok((train.examples, dev.examples))
        }
        _ => Err(Error::config("experiment needs train/dev protocols or train/dev feature directories")),
    }
}

/// Files written by [`train_experiment`] into `dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub model: PathBuf,
    pub checkpoint: PathBuf,
    pub epoch_log: PathBuf,
    pub manifest: PathBuf,
}

impl RunFiles {
    pub fn in_dir(dir: &Path) -> Self {
        RunFiles {
            model: dir.join(MODEL_FILE),
            checkpoint: dir.join(CHECKPOINT_FILE),
            epoch_log: dir.join(EPOCH_LOG_FILE),
            manifest: dir.join(RUN_FILE),
        }
    }
}

pub fn format_epoch_logs(logs: &[EpochLog]) -> String {
    let mut s = String::from("# epoch\ttrain_loss\tdev_loss\tseconds\n");
    for l in logs {
        s += &format_epoch_log(l);
        s.push('\n');
    }
    s
}

/// Builds the configured network and trains it. With an output directory
/// the architecture, best checkpoint, epoch log and run manifest are written
/// there.
pub fn train_experiment(
    cfg: &ExperimentConfig,
    train: &[LabeledExample<f64>],
    dev: &[LabeledExample<f64>],
    out_dir: Option<&Path>,
    on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome<f64>> {
    cfg.validate()?;
    let model = cfg.model_config()?;
    let net = Network::build(model.clone(), cfg.model_init_seed())?;
    let files = out_dir.map(RunFiles::in_dir);
    if let (Some(dir), Some(f)) = (out_dir, &files) {
        std::fs::create_dir_all(dir)?;
        model.write(&f.model)?;
        let mut manifest = cfg.clone();
        manifest.paths.output = Some(dir.to_path_buf());
        manifest.write(&f.manifest)?;
    }
    let tc = cfg.train_config(files.as_ref().map(|f| f.checkpoint.clone()));
    let outcome = train_with_progress(net, train, dev, &tc, on_epoch)?;
    if let Some(f) = &files {
        std::fs::write(&f.epoch_log, format_epoch_logs(&outcome.logs))?;
    }
    Ok(outcome)
}

/// Rebuilds a trained network from its checkpoint and architecture file.
pub fn load_network(checkpoint: &Path, model: &Path) -> Result<Network<f64>> {
    let config = ModelConfig::from_file(model)?;
    let ckpt = read_checkpoint::<f64>(checkpoint)?;
    let mut net = Network::build(config, 0)?;
    net.load_params(&ckpt.names, ckpt.params)?;
    Ok(net)
}

fn check_input(net: &Network<f64>, ex: &LabeledExample<f64>) -> Result<()> {
    let [_, t, f] = net.config().input_shape;
    if ex.split_shape() != (t, f) {
        let (et, ef) = ex.split_shape();
        return Err(Error::shape(format!("{}: features are {et}x{ef}, the model expects {t}x{f}", ex.id)));
    }
    Ok(())
}

/// Mean network LLR per utterance, labelled with the ground truth.
pub fn score_examples(net: &Network<f64>, examples: &[LabeledExample<f64>]) -> Result<Vec<TrialScore>> {
    examples
        .par_iter()
        .map(|ex| {
            check_input(net, ex)?;
            Ok(TrialScore { id: ex.id.clone(), score: score_utterance(net, &ex.splits)?, label: Some(ex.label) })
        })
        .collect()
}

/// One embedding per split.
pub fn embed_example(net: &Network<f64>, ex: &LabeledExample<f64>) -> Result<Vec<Vec<f64>>> {
    check_input(net, ex)?;
    let (t, f) = ex.split_shape();
    let data = ex.splits.iter().flat_map(|s| s.values().iter().copied()).collect();
    let e = net.embed(&Tensor::new(vec![ex.splits.len(), 1, t, f], data)?)?;
    let dim = e.numel() / ex.splits.len();
    Ok(e.data().chunks_exact(dim).map(<[f64]>::to_vec).collect())
}

/// Fits the per-class Gaussians on split embeddings of the training set.
pub fn fit_gaussian_backend(net: &Network<f64>, train: &[LabeledExample<f64>]) -> Result<GaussianBackend<f64>> {
    let embedded = train.par_iter().map(|ex| embed_example(net, ex)).collect::<Result<Vec<_>>>()?;
    let mut genuine = Vec::new();
    let mut spoof = Vec::new();
    for (ex, rows) in train.iter().zip(embedded) {
        match ex.label {
            Label::Genuine => genuine.extend(rows),
            Label::Spoof => spoof.extend(rows),
        }
    }
    GaussianBackend::fit(&genuine, &spoof)
}

/// Mean back-end LLR over each utterance's split embeddings.
pub fn score_examples_gaussian(
    net: &Network<f64>,
    backend: &GaussianBackend<f64>,
    examples: &[LabeledExample<f64>],
) -> Result<Vec<TrialScore>> {
    examples
        .par_iter()
        .map(|ex| {
            let rows = embed_example(net, ex)?;
            let sum = rows.iter().map(|r| backend.llr(r)).sum::<Result<f64>>()?;
            Ok(TrialScore { id: ex.id.clone(), score: sum / rows.len() as f64, label: Some(ex.label) })
        })
        .collect()
}

/// EER of labelled trials, as a fraction.
pub fn eer_of(trials: &[TrialScore], method: crate::metrics::EerMethod) -> Result<f64> {
    let (genuine, spoof) = split_by_label(trials);
    eer(&genuine, &spoof, method)
}

/// Percent with two decimals, the way results are reported.
pub fn format_eer(eer: f64) -> String {
    format!("EER: {:.2}%", 100.0 * eer)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Batch,
    Activation,
    Representation,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "batch" | "batch-size" => Ok(SweepAxis::Batch),
            "activation" => Ok(SweepAxis::Activation),
            "representation" => Ok(SweepAxis::Representation),
            other => Err(Error::config(format!("unknown sweep axis '{other}'"))),
        }
    }
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Batch => "batch",
            SweepAxis::Activation => "activation",
            SweepAxis::Representation => "representation",
        }
    }

    pub fn default_settings(&self) -> Vec<String> {
        let s: &[&str] = match self {
            SweepAxis::Batch => &["8", "16", "32", "64"],
            SweepAxis::Activation => &["mfm", "relu", "elu"],
            SweepAxis::Representation => &["split", "single"],
        };
        s.iter().map(|v| v.to_string()).collect()
    }

    /// The base experiment with this axis set to `setting`.
    pub fn apply(&self, base: &ExperimentConfig, setting: &str) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        match self {
            SweepAxis::Batch => {
                cfg.batch_size =
                    setting.parse().map_err(|_| Error::config(format!("batch size '{setting}' is not a number")))?
            }
            SweepAxis::Activation => cfg.activation = setting.parse()?,
            SweepAxis::Representation => {
                cfg.features.representation = match setting.to_ascii_lowercase().as_str() {
                    "split" => match base.features.representation {
                        r @ Representation::Split(_) => r,
                        Representation::Single { .. } => Representation::Split(Default::default()),
                    },
                    "single" => match base.features.representation {
                        r @ Representation::Single { .. } => r,
                        Representation::Split(_) => {
                            Representation::Single { seconds: super::config::DEFAULT_SINGLE_SECONDS }
                        }
                    },
                    other => {
                        return Err(Error::config(format!("representation must be split or single, got '{other}'")))
                    }
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub setting: String,
    pub dev_eer: f64,
    pub best_epoch: usize,
    pub best_dev_loss: f64,
}

/// Trains and scores one model per setting from a shared base seed.
pub fn run_sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    settings: &[String],
    mut on_row: impl FnMut(&SweepRow),
) -> Result<Vec<SweepRow>> {
    if settings.is_empty() {
        return Err(Error::Empty("sweep has no settings"));
    }
    let configs = settings.iter().map(|s| axis.apply(base, s)).collect::<Result<Vec<_>>>()?;
    let mut cached: Option<(FeatureConfig, Vec<LabeledExample<f64>>, Vec<LabeledExample<f64>>)> = None;
    let mut rows = Vec::with_capacity(settings.len());
    for (setting, cfg) in settings.iter().zip(&configs) {
        if cached.as_ref().is_none_or(|(f, _, _)| *f != cfg.features) {
            let (train, dev) = load_experiment_sets(cfg)?;
            cached = Some((cfg.features, train, dev));
        }
        let (_, train, dev) = cached.as_ref().expect("features loaded");
        let out = cfg.paths.output.as_ref().map(|o| o.join(format!("{}-{setting}", axis.name())));
        let outcome = train_experiment(cfg, train, dev, out.as_deref(), |_| {})?;
        let trials = match cfg.backend {
            super::config::Backend::EndToEnd => score_examples(&outcome.best, dev)?,
            super::config::Backend::Gaussian => {
                let backend = fit_gaussian_backend(&outcome.best, train)?;
                score_examples_gaussian(&outcome.best, &backend, dev)?
            }
        };
        let row = SweepRow {
            setting: setting.clone(),
            dev_eer: eer_of(&trials, cfg.method)?,
            best_epoch: outcome.best_epoch,
            best_dev_loss: outcome.best_dev_loss,
        };
        on_row(&row);
        rows.push(row);
    }
    Ok(rows)
}

pub fn format_sweep_table(axis: SweepAxis, rows: &[SweepRow]) -> String {
    let mut s = format!("{}\tdev EER (%)\tbest epoch\tdev loss\n", axis.name());
    for r in rows {
        writeln!(s, "{}\t{:.2}\t{}\t{:.6}", r.setting, 100.0 * r.dev_eer, r.best_epoch, r.best_dev_loss)
            .expect("writing to a String");
    }
    s
}
