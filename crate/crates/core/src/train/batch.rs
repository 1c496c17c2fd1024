use rand::seq::SliceRandom;

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::Spectrogram;
use crate::nn::Tensor;
use crate::scalar::Real;

/// One utterance: its split spectrograms and class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample<F> {
    pub id: String,
    pub splits: Vec<Spectrogram<F>>,
    pub label: Label,
}

impl<F: Real> LabeledExample<F> {
    pub fn new(id: impl Into<String>, splits: Vec<Spectrogram<F>>, label: Label) -> Result<Self> {
        let id = id.into();
        let first = splits.first().ok_or(Error::Empty("utterance has no splits"))?.shape();
        if splits.iter().any(|s| s.shape() != first) {
            return Err(Error::shape(format!("splits of {id} differ in shape")));
        }
        Ok(LabeledExample { id, splits, label })
    }

    pub fn split_shape(&self) -> (usize, usize) {
        self.splits[0].shape()
    }
}

/// (utterance index, split index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SampleRef {
    pub example: usize,
    pub split: usize,
}

pub type Batch = Vec<SampleRef>;

/// Shuffles every split of every utterance with `rng` and cuts the result
/// into batches of `batch_size`; the last batch may be short.
pub fn make_batches<F: Real, R: rand::Rng + ?Sized>(
    examples: &[LabeledExample<F>],
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<Batch>> {
    if batch_size == 0 {
        return Err(Error::config("batch size must be at least 1"));
    }
    let mut samples: Vec<SampleRef> = examples
        .iter()
        .enumerate()
        .flat_map(|(e, ex)| (0..ex.splits.len()).map(move |s| SampleRef { example: e, split: s }))
        .collect();
    if samples.is_empty() {
        return Err(Error::Empty("no training samples"));
    }
    samples.shuffle(rng);
    Ok(samples.chunks(batch_size).map(<[SampleRef]>::to_vec).collect())
}

/// Stacks the referenced splits into `[N, 1, T, F]` plus class indices.
pub fn assemble_batch<F: Real>(examples: &[LabeledExample<F>], batch: &[SampleRef]) -> Result<(Tensor<F>, Vec<usize>)> {
    let first = batch.first().ok_or(Error::Empty("empty batch"))?;
    let (t, f) = examples[first.example].split_shape();
    let mut data = Vec::with_capacity(batch.len() * t * f);
    let mut labels = Vec::with_capacity(batch.len());
    for s in batch {
        let ex = &examples[s.example];
        let spec = &ex.splits[s.split];
        if spec.shape() != (t, f) {
            return Err(Error::shape(format!("{} has split shape {:?}, batch uses {:?}", ex.id, spec.shape(), (t, f))));
        }
        data.extend_from_slice(spec.values());
        labels.push(ex.label.class_index());
    }
    Ok((Tensor::new(vec![batch.len(), 1, t, f], data)?, labels))
}
