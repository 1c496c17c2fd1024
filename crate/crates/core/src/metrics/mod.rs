//! Trial scoring and evaluation: posterior → LLR conversion, split-averaged
//! utterance scores, EER (ROC convex hull and interpolated), the diagonal
//! Gaussian back-end over network embeddings, and score files.

mod backend;
mod eer;
mod llr;
mod scorefile;

pub use backend::{GaussianBackend, VARIANCE_FLOOR};
pub use eer::{eer, eer_interpolated, eer_rocch, rocch, EerMethod, RocPoint};
pub use llr::{logits_to_llr, posterior_to_llr, score_utterance, score_utterances, POSTERIOR_CLAMP};
pub use scorefile::{read_scores, write_scores, TrialScore};

use crate::corpus::Label;

/// Splits labelled trials into (genuine, spoof) score lists; unlabelled
/// trials are skipped.
pub fn split_by_label(trials: &[TrialScore]) -> (Vec<f64>, Vec<f64>) {
    let mut genuine = Vec::new();
    let mut spoof = Vec::new();
    for t in trials {
        match t.label {
            Some(Label::Genuine) => genuine.push(t.score),
            Some(Label::Spoof) => spoof.push(t.score),
            None => {}
        }
    }
    (genuine, spoof)
}
