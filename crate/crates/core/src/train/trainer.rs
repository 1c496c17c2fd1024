use std::path::PathBuf;
use std::time::Instant;

use rand::{RngCore, SeedableRng};

use super::batch::{assemble_batch, make_batches, Batch, LabeledExample, SampleRef};
use super::early_stop::{EarlyStopping, StopDecision};
use crate::error::{Error, Result};
use crate::model::Network;
use crate::nn::{adam_step, softmax_cross_entropy, write_checkpoint, AdamHyper, AdamState, Rng};
use crate::scalar::Real;

const EVAL_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub adam: AdamHyper,
    pub seed: u64,
    /// Rewritten every time the validation loss improves.
    pub checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            max_epochs: 300,
            patience: 30,
            adam: AdamHyper::default(),
            seed: 0,
            checkpoint: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::config("max epochs and patience must be at least 1"));
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub seconds: f64,
}

/// `epoch<TAB>train_loss<TAB>dev_loss<TAB>seconds`.
pub fn format_epoch_log(log: &EpochLog) -> String {
    format!("{}\t{:.6}\t{:.6}\t{:.3}", log.epoch, log.train_loss, log.dev_loss, log.seconds)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<F> {
    pub best: Network<F>,
    /// Adam state at the best epoch.
    pub adam: AdamState<F>,
    pub best_epoch: usize,
    pub best_dev_loss: f64,
    pub logs: Vec<EpochLog>,
}

/// One Adam step per batch with dropout active; returns the sample-weighted
/// mean training loss.
pub fn run_epoch<F: Real>(
    net: &mut Network<F>,
    state: &mut AdamState<F>,
    examples: &[LabeledExample<F>],
    batches: &[Batch],
    hyper: &AdamHyper,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for (index, batch) in batches.iter().enumerate() {
        let (x, labels) = assemble_batch(examples, batch)?;
        let (logits, trace) = net.forward_traced(&x, Some(&mut *rng)).map_err(|e| match e {
            Error::NonFinite(_) => Error::NonFiniteLoss { batch: index },
            e => e,
        })?;
        let (loss, grad) = softmax_cross_entropy(&logits, &labels).map_err(|e| match e {
            Error::NonFinite(_) => Error::NonFiniteLoss { batch: index },
            e => e,
        })?;
        let (grads, _) = net.backward(trace, &grad)?;
        net.set_grads(grads)?;
        adam_step(net.params_mut(), state, hyper)?;
        total += loss.as_f64() * batch.len() as f64;
        count += batch.len();
    }
    if count == 0 {
        return Err(Error::Empty("epoch has no batches"));
    }
    Ok(total / count as f64)
}

/// Inference-mode mean cross-entropy over every split of every example.
pub fn evaluate_loss<F: Real>(net: &Network<F>, examples: &[LabeledExample<F>]) -> Result<f64> {
    let samples: Vec<SampleRef> = examples
        .iter()
        .enumerate()
        .flat_map(|(e, ex)| (0..ex.splits.len()).map(move |s| SampleRef { example: e, split: s }))
        .collect();
    if samples.is_empty() {
        return Err(Error::Empty("no evaluation samples"));
    }
    let mut total = 0.0;
    for chunk in samples.chunks(EVAL_CHUNK) {
        let (x, labels) = assemble_batch(examples, chunk)?;
        let logits = net.infer(&x)?;
        let (loss, _) = softmax_cross_entropy(&logits, &labels)?;
        total += loss.as_f64() * chunk.len() as f64;
    }
    Ok(total / samples.len() as f64)
}

pub fn train<F: Real>(
    net: Network<F>,
    train_set: &[LabeledExample<F>],
    dev_set: &[LabeledExample<F>],
    cfg: &TrainConfig,
) -> Result<TrainOutcome<F>> {
    train_with_progress(net, train_set, dev_set, cfg, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with_progress<F: Real>(
    mut net: Network<F>,
    train_set: &[LabeledExample<F>],
    dev_set: &[LabeledExample<F>],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome<F>> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if dev_set.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let mut rng = Rng::seed_from_u64(cfg.seed);
    let mut state = AdamState::new(net.params());
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut logs = Vec::new();
    let mut best: Option<(Network<F>, AdamState<F>)> = None;

    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        let batches = make_batches(train_set, cfg.batch_size, &mut rng)?;
        let train_loss = run_epoch(&mut net, &mut state, train_set, &batches, &cfg.adam, &mut rng)?;
        let dev_loss = evaluate_loss(&net, dev_set)?;
        let log = EpochLog { epoch, train_loss, dev_loss, seconds: started.elapsed().as_secs_f64() };
        on_epoch(&log);
        logs.push(log);

        match stopper.observe(dev_loss) {
            StopDecision::Improved => {
                let mut snapshot = net.clone();
                snapshot.params_mut().iter_mut().for_each(|p| p.grad = None);
                if let Some(path) = &cfg.checkpoint {
                    write_checkpoint(path, snapshot.names(), snapshot.params(), &state)?;
                }
                best = Some((snapshot, state.clone()));
            }
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }

    let (best, adam) = best.ok_or_else(|| Error::NonFinite("validation loss never improved".into()))?;
    Ok(TrainOutcome {
        best,
        adam,
        best_epoch: stopper.best_epoch().unwrap_or(0),
        best_dev_loss: stopper.best_loss(),
        logs,
    })
}
