//! Mini-batch training: every split is one sample, Adam updates, dropout in
//! training mode, early stopping on validation loss with a best-snapshot.

mod batch;
mod early_stop;
mod trainer;

pub use batch::{assemble_batch, make_batches, Batch, LabeledExample, SampleRef};
pub use early_stop::{EarlyStopping, StopDecision};
pub use trainer::{
    evaluate_loss, format_epoch_log, run_epoch, train, train_with_progress, EpochLog, TrainConfig, TrainOutcome,
};
