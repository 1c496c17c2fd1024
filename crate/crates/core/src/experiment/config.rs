use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::kv::{flag, KvDoc, KvWriter};
use crate::corpus::{file_seed, SynthConfig};
use crate::error::{Error, Result};
use crate::features::{SpectrogramConfig, SplitConfig};
use crate::metrics::EerMethod;
use crate::model::{model3_default, Activation, ModelConfig};
use crate::nn::AdamHyper;
use crate::train::TrainConfig;

/// Independent random streams derived from one top-level seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    SynthTrain,
    SynthDev,
    ModelInit,
    Training,
}

pub fn stage_seed(seed: u64, stage: Stage) -> u64 {
    let stream = match stage {
        Stage::SynthTrain => 0x5354_0001,
        Stage::SynthDev => 0x5354_0002,
        Stage::ModelInit => 0x5354_0003,
        Stage::Training => 0x5354_0004,
    };
    file_seed(seed, stream)
}

/// How an utterance becomes network inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Representation {
    /// Pad or cut to whole seconds, then cut into fixed windows.
    Split(SplitConfig),
    /// Loop or cut to a fixed duration and use the whole spectrogram.
    Single { seconds: f64 },
}

impl Representation {
    pub fn name(&self) -> &'static str {
        match self {
            Representation::Split(_) => "split",
            Representation::Single { .. } => "single",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Representation::Split(s) => s.validate(),
            Representation::Single { seconds } if *seconds > 0.0 && seconds.is_finite() => Ok(()),
            Representation::Single { seconds } => {
                Err(Error::config(format!("single length {seconds} s must be positive")))
            }
        }
    }
}

/// Everything that decides the feature values of an utterance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    pub spectrogram: SpectrogramConfig,
    pub representation: Representation,
    /// Strip exactly-zero leading samples before analysis.
    pub trim: bool,
    /// Drop the known speech-free files from protocols.
    pub blacklist: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            spectrogram: SpectrogramConfig::default(),
            representation: Representation::Split(SplitConfig::default()),
            trim: false,
            blacklist: true,
        }
    }
}

pub const DEFAULT_SINGLE_SECONDS: f64 = 3.0;

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        self.spectrogram.validate()?;
        self.representation.validate()
    }

    /// Frames × bins of one network input.
    pub fn input_shape(&self) -> (usize, usize) {
        let frames = match self.representation {
            Representation::Split(s) => s.spec_wind,
            Representation::Single { seconds } => {
                let samples = (seconds * self.spectrogram.sample_rate as f64).round() as usize;
                samples / self.spectrogram.hop
            }
        };
        (frames, self.spectrogram.bins())
    }

    pub(crate) fn write_section(&self, w: &mut KvWriter) {
        let s = &self.spectrogram;
        w.section("features")
            .key("sample_rate", s.sample_rate)
            .key("fft_size", s.fft_size)
            .key("window_size", s.window_size)
            .key("hop", s.hop)
            .key("log_floor", s.log_floor)
            .key("representation", self.representation.name());
        match self.representation {
            Representation::Split(sp) => {
                w.key("spec_wind", sp.spec_wind).key("wind_shift", sp.wind_shift);
            }
            Representation::Single { seconds } => {
                w.key("single_seconds", seconds);
            }
        }
        w.key("trim", flag(self.trim)).key("blacklist", flag(self.blacklist));
    }

    pub(crate) fn take_section(doc: &mut KvDoc) -> Result<Self> {
        const S: &str = "features";
        let d = FeatureConfig::default();
        let ds = d.spectrogram;
        let fft_size = doc.take_or(S, "fft_size", ds.fft_size)?;
        let spectrogram = SpectrogramConfig {
            sample_rate: doc.take_or(S, "sample_rate", ds.sample_rate)?,
            fft_size,
            // the window follows the FFT size unless given
            window_size: doc.take_or(S, "window_size", fft_size)?,
            hop: doc.take_or(S, "hop", ds.hop)?,
            log_floor: doc.take_or(S, "log_floor", ds.log_floor)?,
        };
        let kind: String = doc.take_or(S, "representation", "split".to_string())?;
        let representation = match kind.to_ascii_lowercase().as_str() {
            "split" => {
                if doc.has(S, "single_seconds") {
                    return Err(Error::config("single_seconds given with representation = split"));
                }
                let base = SplitConfig::default();
                Representation::Split(SplitConfig {
                    spec_wind: doc.take_or(S, "spec_wind", base.spec_wind)?,
                    wind_shift: doc.take_or(S, "wind_shift", base.wind_shift)?,
                })
            }
            "single" => {
                if doc.has(S, "spec_wind") || doc.has(S, "wind_shift") {
                    return Err(Error::config("split window settings given with representation = single"));
                }
                Representation::Single { seconds: doc.take_or(S, "single_seconds", DEFAULT_SINGLE_SECONDS)? }
            }
            other => return Err(Error::config(format!("representation must be split or single, got '{other}'"))),
        };
        let cfg = FeatureConfig {
            spectrogram,
            representation,
            trim: doc.take_flag(S, "trim", d.trim)?,
            blacklist: doc.take_flag(S, "blacklist", d.blacklist)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut w = KvWriter::default();
        self.write_section(&mut w);
        w.finish()
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut doc = KvDoc::parse(text, path)?;
        let cfg = Self::take_section(&mut doc)?;
        doc.finish()?;
        Ok(cfg)
    }
}

/// Scoring path for trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Mean network LLR over splits.
    #[default]
    EndToEnd,
    /// Per-class diagonal Gaussians over the first linear layer's output.
    Gaussian,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::EndToEnd => "end-to-end",
            Backend::Gaussian => "gaussian",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "end-to-end" | "cnn" | "network" => Ok(Backend::EndToEnd),
            "gaussian" | "gmm" => Ok(Backend::Gaussian),
            other => Err(Error::config(format!("unknown back-end '{other}'"))),
        }
    }
}

fn method_name(m: EerMethod) -> &'static str {
    match m {
        EerMethod::Rocch => "rocch",
        EerMethod::Interpolated => "interpolated",
    }
}

/// Architecture source: the built-in Model 3 or a layer file.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelChoice {
    Model3,
    File(PathBuf),
}

impl fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelChoice::Model3 => f.write_str("model3"),
            ModelChoice::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl FromStr for ModelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("model3") {
            Ok(ModelChoice::Model3)
        } else if s.is_empty() {
            Err(Error::config("empty model reference"))
        } else {
            Ok(ModelChoice::File(PathBuf::from(s)))
        }
    }
}

/// Input locations and the output directory; unset entries stay `None`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Paths {
    pub train_protocol: Option<PathBuf>,
    pub dev_protocol: Option<PathBuf>,
    pub train_audio: Option<PathBuf>,
    pub dev_audio: Option<PathBuf>,
    pub train_features: Option<PathBuf>,
    pub dev_features: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Paths {
    fn entries(&self) -> [(&'static str, &Option<PathBuf>); 7] {
        [
            ("train_protocol", &self.train_protocol),
            ("dev_protocol", &self.dev_protocol),
            ("train_audio", &self.train_audio),
            ("dev_audio", &self.dev_audio),
            ("train_features", &self.train_features),
            ("dev_features", &self.dev_features),
            ("output", &self.output),
        ]
    }
}

/// One training/evaluation experiment; also the run manifest written next
/// to every trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub paths: Paths,
    pub features: FeatureConfig,
    pub model: ModelChoice,
    pub activation: Activation,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub adam: AdamHyper,
    pub method: EerMethod,
    pub backend: Backend,
    /// Every random stream of a run derives from this.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        ExperimentConfig {
            paths: Paths::default(),
            features: FeatureConfig::default(),
            model: ModelChoice::Model3,
            activation: Activation::Mfm,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.patience,
            adam: t.adam,
            method: EerMethod::Rocch,
            backend: Backend::EndToEnd,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.train_config(None).validate()
    }

    /// Trainer settings with the training stream seed filled in.
    pub fn train_config(&self, checkpoint: Option<PathBuf>) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            adam: self.adam,
            seed: stage_seed(self.seed, Stage::Training),
            checkpoint,
        }
    }

    pub fn model_init_seed(&self) -> u64 {
        stage_seed(self.seed, Stage::ModelInit)
    }

    /// The architecture sized for this experiment's inputs, with the
    /// configured activation everywhere.
    pub fn model_config(&self) -> Result<ModelConfig> {
        let (frames, bins) = self.features.input_shape();
        let base = match &self.model {
            ModelChoice::Model3 => model3_default(),
            ModelChoice::File(p) => ModelConfig::from_file(p)?,
        };
        let cfg = base.with_input(frames, bins).with_activation(self.activation);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut w = KvWriter::default();
        w.section("run").key("seed", self.seed);
        w.section("paths");
        for (key, value) in self.paths.entries() {
            if let Some(p) = value {
                w.key(key, p.display());
            }
        }
        self.features.write_section(&mut w);
        w.section("model").key("config", &self.model).key("activation", self.activation.name());
        if let Activation::Elu { alpha } = self.activation {
            w.key("elu_alpha", alpha);
        }
        w.section("train")
            .key("batch_size", self.batch_size)
            .key("max_epochs", self.max_epochs)
            .key("patience", self.patience)
            .key("learning_rate", self.adam.learning_rate)
            .key("beta1", self.adam.beta1)
            .key("beta2", self.adam.beta2)
            .key("epsilon", self.adam.epsilon);
        w.section("score").key("method", method_name(self.method)).key("backend", self.backend);
        w.finish()
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut doc = KvDoc::parse(text, path)?;
        let d = ExperimentConfig::default();
        let mut paths = Paths::default();
        for (key, slot) in [
            ("train_protocol", &mut paths.train_protocol),
            ("dev_protocol", &mut paths.dev_protocol),
            ("train_audio", &mut paths.train_audio),
            ("dev_audio", &mut paths.dev_audio),
            ("train_features", &mut paths.train_features),
            ("dev_features", &mut paths.dev_features),
            ("output", &mut paths.output),
        ] {
            *slot = doc.take::<PathBuf>("paths", key)?;
        }
        let features = FeatureConfig::take_section(&mut doc)?;
        let model = doc.take_or("model", "config", d.model)?;
        let mut activation = doc.take_or("model", "activation", d.activation)?;
        let alpha = doc.take::<f64>("model", "elu_alpha")?;
        match (&mut activation, alpha) {
            (Activation::Elu { alpha: a }, Some(v)) => *a = v,
            (_, Some(_)) => return Err(Error::config("elu_alpha given for a non-ELU activation")),
            _ => {}
        }
        let adam = AdamHyper {
            learning_rate: doc.take_or("train", "learning_rate", d.adam.learning_rate)?,
            beta1: doc.take_or("train", "beta1", d.adam.beta1)?,
            beta2: doc.take_or("train", "beta2", d.adam.beta2)?,
            epsilon: doc.take_or("train", "epsilon", d.adam.epsilon)?,
        };
        let cfg = ExperimentConfig {
            paths,
            features,
            model,
            activation,
            batch_size: doc.take_or("train", "batch_size", d.batch_size)?,
            max_epochs: doc.take_or("train", "max_epochs", d.max_epochs)?,
            patience: doc.take_or("train", "patience", d.patience)?,
            adam,
            method: doc.take_or("score", "method", d.method)?,
            backend: doc.take_or("score", "backend", d.backend)?,
            seed: doc.take_or("run", "seed", d.seed)?,
        };
        doc.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Train and dev subsets of a synthetic corpus sharing channel settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    /// Duration, rate and channel settings; counts and seed are per subset.
    pub channel: SynthConfig,
    pub train: (usize, usize),
    pub dev: (usize, usize),
    pub seed: u64,
}

impl Default for CorpusSpec {
    /// 200+200 training and 50+50 development utterances.
    fn default() -> Self {
        CorpusSpec { channel: SynthConfig::default(), train: (200, 200), dev: (50, 50), seed: 0 }
    }
}

impl CorpusSpec {
    pub fn subset(&self, dev: bool) -> SynthConfig {
        let ((genuine, spoof), stage, prefix) =
            if dev { (self.dev, Stage::SynthDev, "D_") } else { (self.train, Stage::SynthTrain, "T_") };
        SynthConfig {
            genuine,
            spoof,
            seed: stage_seed(self.seed, stage),
            id_prefix: prefix.to_string(),
            ..self.channel.clone()
        }
    }

    pub fn to_text(&self) -> String {
        let c = &self.channel;
        let mut w = KvWriter::default();
        w.section("corpus")
            .key("seed", self.seed)
            .key("train_genuine", self.train.0)
            .key("train_spoof", self.train.1)
            .key("dev_genuine", self.dev.0)
            .key("dev_spoof", self.dev.1);
        w.section("audio")
            .key("sample_rate", c.sample_rate)
            .key("min_seconds", c.min_seconds)
            .key("max_seconds", c.max_seconds);
        w.section("channel")
            .key("cutoff_hz", c.cutoff_hz)
            .key("noise_level", c.noise_level)
            .key("gain_min", c.gain_min)
            .key("gain_max", c.gain_max)
            .key("clip_drive", c.clip_drive);
        w.finish()
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut doc = KvDoc::parse(text, path)?;
        let d = CorpusSpec::default();
        let c = &d.channel;
        let channel = SynthConfig {
            sample_rate: doc.take_or("audio", "sample_rate", c.sample_rate)?,
            min_seconds: doc.take_or("audio", "min_seconds", c.min_seconds)?,
            max_seconds: doc.take_or("audio", "max_seconds", c.max_seconds)?,
            cutoff_hz: doc.take_or("channel", "cutoff_hz", c.cutoff_hz)?,
            noise_level: doc.take_or("channel", "noise_level", c.noise_level)?,
            gain_min: doc.take_or("channel", "gain_min", c.gain_min)?,
            gain_max: doc.take_or("channel", "gain_max", c.gain_max)?,
            clip_drive: doc.take_or("channel", "clip_drive", c.clip_drive)?,
            ..c.clone()
        };
        let spec = CorpusSpec {
            seed: doc.take_or("corpus", "seed", d.seed)?,
            train: (
                doc.take_or("corpus", "train_genuine", d.train.0)?,
                doc.take_or("corpus", "train_spoof", d.train.1)?,
            ),
            dev: (doc.take_or("corpus", "dev_genuine", d.dev.0)?, doc.take_or("corpus", "dev_spoof", d.dev.1)?),
            channel,
        };
        doc.finish()?;
        spec.subset(false).validate()?;
        spec.subset(true).validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("exp.cfg")
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&cfg.to_text(), p()).unwrap(), cfg);
        assert_eq!(ExperimentConfig::parse("", p()).unwrap(), cfg);
    }

    #[test]
    fn customised_round_trip() {
        let mut cfg = ExperimentConfig {
            activation: Activation::Elu { alpha: 0.5 },
            batch_size: 8,
            seed: 42,
            method: EerMethod::Interpolated,
            backend: Backend::Gaussian,
            model: ModelChoice::File("arch.cfg".into()),
            ..ExperimentConfig::default()
        };
        cfg.adam.learning_rate = 1e-3 / 3.0;
        cfg.paths.train_features = Some("feats/train".into());
        cfg.paths.output = Some("run".into());
        cfg.features.representation = Representation::Single { seconds: 3.0 };
        cfg.features.trim = true;
        assert_eq!(ExperimentConfig::parse(&cfg.to_text(), p()).unwrap(), cfg);
    }

    #[test]
    fn representation_is_exclusive() {
        assert!(ExperimentConfig::parse("[features]\nrepresentation = split\nsingle_seconds = 3", p()).is_err());
        assert!(ExperimentConfig::parse("[features]\nrepresentation = single\nspec_wind = 100", p()).is_err());
        assert!(ExperimentConfig::parse("[features]\nrepresentation = both", p()).is_err());
    }

    #[test]
    fn unknown_keys_and_bad_values() {
        assert!(ExperimentConfig::parse("[train]\nbatchsize = 3", p()).is_err());
        assert!(ExperimentConfig::parse("[train]\nbatch_size = 0", p()).is_err());
        assert!(ExperimentConfig::parse("[model]\nactivation = tanh", p()).is_err());
        assert!(ExperimentConfig::parse("[model]\nactivation = relu\nelu_alpha = 2", p()).is_err());
    }

    #[test]
    fn input_shapes() {
        let mut f = FeatureConfig::default();
        assert_eq!(f.input_shape(), (100, 129));
        f.representation = Representation::Single { seconds: 3.0 };
        assert_eq!(f.input_shape(), (300, 129));
        f.spectrogram = SpectrogramConfig::with_fft(512);
        assert_eq!(f.input_shape(), (300, 257));
    }

    #[test]
    fn model3_sized_to_inputs() {
        let cfg = ExperimentConfig::default();
        assert_eq!(crate::model::count_params(&cfg.model_config().unwrap()).unwrap(), 7682);
    }

    #[test]
    fn corpus_spec() {
        let spec = CorpusSpec::default();
        assert_eq!(CorpusSpec::parse(&spec.to_text(), p()).unwrap(), spec);
        let (t, d) = (spec.subset(false), spec.subset(true));
        assert_eq!((t.genuine, t.spoof, d.genuine, d.spoof), (200, 200, 50, 50));
        assert_ne!(t.seed, d.seed);
        assert_ne!(t.id_prefix, d.id_prefix);
    }

    #[test]
    fn stage_seeds_differ() {
        let s = [Stage::SynthTrain, Stage::SynthDev, Stage::ModelInit, Stage::Training].map(|st| stage_seed(5, st));
        for i in 0..s.len() {
            for j in 0..i {
                assert_ne!(s[i], s[j]);
            }
        }
    }
}
