//! Dense feed-forward networks with hand-written backward passes.
//!
//! Parameters of a network live in one flat, row-major buffer (weights of
//! layer 0, bias of layer 0, weights of layer 1, ...). Optimizers, Polyak
//! averaging, gradient checks and checkpoints all work on that buffer.

mod adam;
mod gradcheck;
mod mlp;
mod real;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::{grad_check, GradCheckReport};
pub use mlp::{polyak_update, Activation, ForwardCache, Gradients, Mlp};
pub use real::Real;
