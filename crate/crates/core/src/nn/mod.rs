//! Tensor arithmetic with hand-written reverse-mode gradients for the fixed
//! op set a compact spoofing CNN needs, plus Xavier init and Adam.
//!
//! Every op is a forward function paired with a `*_backward` function that
//! maps the upstream gradient to gradients of its inputs. There is no
//! general graph; the network module chains these in order.

mod adam;
mod checkpoint;
mod gradcheck;
mod init;
mod ops;
mod tensor;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use gradcheck::{grad_check, relative_error, DEFAULT_STEP};
pub use init::{xavier_bound, xavier_init};
pub use ops::{
    conv2d, conv2d_backward, dropout, dropout_backward, elu, elu_backward, linear, linear_backward, maxpool2d,
    maxpool2d_backward, mfm, mfm_backward, pool_extent, relu, relu_backward, softmax_cross_entropy, ConvGrads,
    DropoutMask, LinearGrads, MfmWinners, Padding, PoolIndices, PoolSpec, DEFAULT_ELU_ALPHA,
};
pub use tensor::Tensor;

/// Seeded generator used for every random draw in the crate.
pub type Rng = rand_chacha::ChaCha8Rng;
