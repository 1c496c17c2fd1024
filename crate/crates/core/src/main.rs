use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use antispoof::corpus::{Label, Subset};
use antispoof::experiment::{
    apply_norm, eer_of, featurize_manifest, fit_gaussian_backend, fit_norm, format_eer, format_sweep_table,
    generate_corpus, load_manifest, load_network, read_feature_dir, run_sweep, score_examples, score_examples_gaussian,
    train_experiment, write_feature_dir, Backend, CorpusSpec, ExperimentConfig, FeatureConfig, ModelChoice,
    Representation, RunFiles, SweepAxis, MODEL_FILE,
};
use antispoof::features::{read_norm_stats, write_norm_stats, SpectrogramConfig, SplitConfig};
use antispoof::metrics::{read_scores, write_scores, EerMethod};
use antispoof::model::{count_params, model3_default, shape_trace, Activation, ModelConfig};
use antispoof::train::format_epoch_log;

#[derive(Parser)]
#[command(name = "antispoof", version, about = "Replay-spoofing detection: features, training, scoring and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic genuine/replay corpus (train and dev subsets).
    Synth(SynthArgs),
    /// Compute spectrogram features for every utterance of a protocol.
    Featurize(FeaturizeArgs),
    /// Train a model on featurized train/dev sets.
    Train(TrainArgs),
    /// Score featurized utterances with a trained model.
    Score(ScoreArgs),
    /// Equal error rate of a labelled score file.
    Eer(EerArgs),
    /// Train and evaluate one model per setting along an axis.
    Sweep(SweepArgs),
    /// Print the parameter count and shape trace of a model.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory; receives train/ and dev/ subdirectories.
    #[arg(long)]
    out: PathBuf,
    /// Corpus settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Utterances per class in the training subset.
    #[arg(long)]
    train_per_class: Option<usize>,
    /// Utterances per class in the development subset.
    #[arg(long)]
    dev_per_class: Option<usize>,
}

#[derive(Args)]
struct FeatureArgs {
    /// Experiment file whose [features] section supplies the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    fft: Option<usize>,
    #[arg(long)]
    hop: Option<usize>,
    /// Window length in frames of the split representation.
    #[arg(long)]
    spec_wind: Option<usize>,
    /// Window shift in frames of the split representation.
    #[arg(long)]
    wind_shift: Option<usize>,
    /// Use one fixed-length spectrogram per utterance instead of splits.
    #[arg(long)]
    single: bool,
    /// Length of the single spectrogram.
    #[arg(long, requires = "single")]
    seconds: Option<f64>,
    /// Strip leading exactly-zero samples.
    #[arg(long)]
    trim: bool,
    /// Keep files that the default blacklist would drop.
    #[arg(long)]
    no_blacklist: bool,
}

impl FeatureArgs {
    fn resolve(&self) -> Result<FeatureConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?.features,
            None => FeatureConfig::default(),
        };
        if let Some(fft) = self.fft {
            cfg.spectrogram = SpectrogramConfig { hop: cfg.spectrogram.hop, ..SpectrogramConfig::with_fft(fft) };
        }
        if let Some(hop) = self.hop {
            cfg.spectrogram.hop = hop;
        }
        if self.single {
            if self.spec_wind.is_some() || self.wind_shift.is_some() {
                bail!("--single cannot be combined with split window settings");
            }
            let seconds = match (self.seconds, cfg.representation) {
                (Some(s), _) => s,
                (None, Representation::Single { seconds }) => seconds,
                (None, _) => antispoof::experiment::DEFAULT_SINGLE_SECONDS,
            };
            cfg.representation = Representation::Single { seconds };
        } else if self.spec_wind.is_some() || self.wind_shift.is_some() {
            let base = match cfg.representation {
                Representation::Split(s) => s,
                Representation::Single { .. } => SplitConfig::default(),
            };
            cfg.representation = Representation::Split(SplitConfig {
                spec_wind: self.spec_wind.unwrap_or(base.spec_wind),
                wind_shift: self.wind_shift.unwrap_or(base.wind_shift),
            });
        }
        cfg.trim |= self.trim;
        if self.no_blacklist {
            cfg.blacklist = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct FeaturizeArgs {
    /// Protocol file listing the utterances.
    #[arg(long)]
    protocol: PathBuf,
    /// Audio directory; defaults to the protocol's directory.
    #[arg(long)]
    audio: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    features: FeatureArgs,
    /// Fit normalization statistics on this (training) set, write them here
    /// and apply them.
    #[arg(long, conflicts_with = "norm")]
    fit_norm: Option<PathBuf>,
    /// Apply previously fit normalization statistics.
    #[arg(long)]
    norm: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Experiment file; a run.cfg from an earlier run repeats that run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Featurized training set.
    #[arg(long)]
    train: Option<PathBuf>,
    /// Featurized development set.
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Run directory for the model, checkpoint, epoch log and run manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model 3 or a layer file.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    activation: Option<Activation>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Architecture file; defaults to model.cfg beside the checkpoint.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Featurized utterances to score.
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "end-to-end")]
    backend: Backend,
    /// Featurized training set the Gaussian back-end is fit on.
    #[arg(long, required_if_eq("backend", "gaussian"))]
    backend_train: Option<PathBuf>,
}

#[derive(Args)]
struct EerArgs {
    /// Score file with a label column.
    scores: PathBuf,
    #[arg(long, default_value = "rocch")]
    method: EerMethod,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    axis: SweepAxis,
    /// Comma-separated settings; defaults depend on the axis.
    #[arg(long, value_delimiter = ',')]
    settings: Option<Vec<String>>,
    /// Parent directory for per-setting runs.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    /// `model3` or a layer file.
    #[arg(default_value = "model3")]
    model: String,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        // a closed pipe (e.g. `| head`) is not a failure of the command
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Featurize(a) => featurize(a),
        Command::Train(a) => train(a),
        Command::Score(a) => score(a),
        Command::Eer(a) => eer(a),
        Command::Sweep(a) => sweep(a),
        Command::Inspect(a) => inspect(a),
    }
}

fn count(entries: &[antispoof::corpus::ProtocolEntry], label: Label) -> usize {
    entries.iter().filter(|e| e.label == label).count()
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut spec = match &a.config {
        Some(p) => CorpusSpec::from_file(p)?,
        None => CorpusSpec::default(),
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(n) = a.train_per_class {
        spec.train = (n, n);
    }
    if let Some(n) = a.dev_per_class {
        spec.dev = (n, n);
    }
    let (train, dev) = generate_corpus(&spec, &a.out)?;
    for (name, entries) in [("train", &train), ("dev", &dev)] {
        println!(
            "{name}: {} genuine + {} spoof -> {}",
            count(entries, Label::Genuine),
            count(entries, Label::Spoof),
            a.out.join(name).display()
        );
    }
    Ok(())
}

fn featurize(a: FeaturizeArgs) -> Result<()> {
    let cfg = a.features.resolve()?;
    let manifest = load_manifest(Subset::Train, &a.protocol, a.audio.as_deref(), &cfg)?;
    let mut examples = featurize_manifest(&manifest, &cfg)?;
    if let Some(path) = &a.fit_norm {
        let stats = fit_norm(&examples)?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        write_norm_stats(path, &stats).with_context(|| format!("writing {}", path.display()))?;
        apply_norm(&mut examples, &stats)?;
    } else if let Some(path) = &a.norm {
        apply_norm(&mut examples, &read_norm_stats(path).with_context(|| format!("reading {}", path.display()))?)?;
    }
    write_feature_dir(&a.out, &cfg, &manifest.entries, &examples)?;
    let splits: usize = examples.iter().map(|e| e.splits.len()).sum();
    let (t, f) = cfg.input_shape();
    println!("{} utterances, {splits} inputs of {t}x{f} -> {}", examples.len(), a.out.display());
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = a.train {
        cfg.paths.train_features = Some(p);
    }
    if let Some(p) = a.dev {
        cfg.paths.dev_features = Some(p);
    }
    if let Some(p) = a.out {
        cfg.paths.output = Some(p);
    }
    if let Some(m) = &a.model {
        cfg.model = m.parse::<ModelChoice>()?;
    }
    if let Some(act) = a.activation {
        cfg.activation = act;
    }
    if let Some(b) = a.batch_size {
        cfg.batch_size = b;
    }
    if let Some(m) = a.max_epochs {
        cfg.max_epochs = m;
    }
    if let Some(p) = a.patience {
        cfg.patience = p;
    }
    if let Some(lr) = a.learning_rate {
        cfg.adam.learning_rate = lr;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let (Some(train_dir), Some(dev_dir)) = (&cfg.paths.train_features, &cfg.paths.dev_features) else {
        bail!("training needs --train and --dev feature directories");
    };
    let out = cfg.paths.output.clone().context("training needs an output directory (--out)")?;
    let train_set = read_feature_dir(train_dir)?;
    let dev_set = read_feature_dir(dev_dir)?;
    if train_set.config != dev_set.config {
        bail!("train and dev features were computed with different settings");
    }
    cfg.features = train_set.config;
    cfg.validate()?;
    println!("# epoch\ttrain_loss\tdev_loss\tseconds");
    let outcome = train_experiment(&cfg, &train_set.examples, &dev_set.examples, Some(&out), |log| {
        println!("{}", format_epoch_log(log))
    })?;
    let files = RunFiles::in_dir(&out);
    println!(
        "best epoch {} (dev loss {:.6}); checkpoint {}",
        outcome.best_epoch,
        outcome.best_dev_loss,
        files.checkpoint.display()
    );
    Ok(())
}

fn sibling_model(checkpoint: &Path) -> PathBuf {
    checkpoint.parent().unwrap_or(Path::new(".")).join(MODEL_FILE)
}

fn score(a: ScoreArgs) -> Result<()> {
    let model = a.model.clone().unwrap_or_else(|| sibling_model(&a.checkpoint));
    let net = load_network(&a.checkpoint, &model)?;
    let set = read_feature_dir(&a.features)?;
    let trials = match a.backend {
        Backend::EndToEnd => score_examples(&net, &set.examples)?,
        Backend::Gaussian => {
            let dir = a.backend_train.as_ref().context("--backend gaussian needs --backend-train")?;
            let backend = fit_gaussian_backend(&net, &read_feature_dir(dir)?.examples)?;
            score_examples_gaussian(&net, &backend, &set.examples)?
        }
    };
    write_scores(&a.out, &trials)?;
    println!("{} trials -> {}", trials.len(), a.out.display());
    Ok(())
}

fn eer(a: EerArgs) -> Result<()> {
    let trials = read_scores(&a.scores)?;
    if trials.iter().any(|t| t.label.is_none()) {
        bail!("{}: every trial needs a label column", a.scores.display());
    }
    println!("{}", format_eer(eer_of(&trials, a.method)?));
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_file(&a.config)?;
    if let Some(out) = a.out {
        cfg.paths.output = Some(out);
    }
    let settings: Vec<String> = match a.settings {
        Some(list) => list.into_iter().filter(|s| !s.trim().is_empty()).collect(),
        None => a.axis.default_settings(),
    };
    let rows = run_sweep(&cfg, a.axis, &settings, |row| {
        eprintln!("{} = {}: dev EER {:.2}%", a.axis.name(), row.setting, 100.0 * row.dev_eer)
    })?;
    print!("{}", format_sweep_table(a.axis, &rows));
    Ok(())
}

fn inspect(a: InspectArgs) -> Result<()> {
    let config = match a.model.parse::<ModelChoice>()? {
        ModelChoice::Model3 => model3_default(),
        ModelChoice::File(p) => ModelConfig::from_file(&p)?,
    };
    let rows = shape_trace(&config)?;
    let mut out = io::stdout().lock();
    writeln!(out, "params: {}", count_params(&config)?)?;
    writeln!(out, "input\t{}", config.input_feature_shape())?;
    for r in rows {
        writeln!(out, "{}\t{}\t{}\t{}", r.index, r.layer, r.output, r.params)?;
    }
    Ok(())
}
