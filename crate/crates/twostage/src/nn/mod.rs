//! Minimal dense neural-network core: an MLP with hand-written backprop, a
//! diagonal-Gaussian policy head, an Adam optimizer and a versioned text
//! checkpoint format.
//!
//! All math is `f64`. There is no autograd: [`MlpParams::backward`] computes
//! exact gradients for the fixed tanh/linear architecture and is validated
//! against central finite differences in the test suite.

mod adam;
mod checkpoint;
mod gaussian;
mod mlp;

pub use adam::OptimizerState;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError};
pub use gaussian::{log_prob_given_mean, GaussianPolicy, LOG_STD_MAX, LOG_STD_MIN};
pub use mlp::{Activation, MlpGradients, MlpParams, MlpSpec, NnError, Scratch};
