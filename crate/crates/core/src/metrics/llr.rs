use rayon::prelude::*;

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::Spectrogram;
use crate::model::Network;
use crate::nn::Tensor;
use crate::scalar::Real;

pub const POSTERIOR_CLAMP: f64 = 1e-12;

/// `ln(p / (1 - p))` with `p` clamped to `[1e-12, 1 - 1e-12]`.
pub fn posterior_to_llr(p_genuine: f64) -> f64 {
    let p = p_genuine.clamp(POSTERIOR_CLAMP, 1.0 - POSTERIOR_CLAMP);
    (p / (1.0 - p)).ln()
}

/// For a two-way softmax the posterior log-odds is the logit difference.
pub fn logits_to_llr<F: Real>(logits: &[F]) -> F {
    logits[Label::Genuine.class_index()] - logits[Label::Spoof.class_index()]
}

/// Mean per-split LLR in inference mode.
pub fn score_utterance<F: Real>(net: &Network<F>, splits: &[Spectrogram<F>]) -> Result<F> {
    let first = splits.first().ok_or(Error::Empty("utterance has no splits"))?;
    let (t, f) = first.shape();
    let mut data = Vec::with_capacity(splits.len() * t * f);
    for s in splits {
        if s.shape() != (t, f) {
            return Err(Error::shape("splits of one utterance differ in shape"));
        }
        data.extend_from_slice(s.values());
    }
    let logits = net.infer(&Tensor::new(vec![splits.len(), 1, t, f], data)?)?;
    let sum: F = logits.data().chunks_exact(2).map(logits_to_llr).sum();
    Ok(sum / F::of_usize(splits.len()))
}

/// Scores many utterances in parallel; output order follows input order.
pub fn score_utterances<F: Real>(net: &Network<F>, utterances: &[&[Spectrogram<F>]]) -> Result<Vec<F>> {
    utterances.par_iter().map(|s| score_utterance(net, s)).collect()
}
