//! Self-imitation learning from demonstrations at desk scale.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: dense feed-forward networks with exact backward passes,
//!   Adam, Polyak averaging and a finite-difference gradient checker.
//! - [`envs`]: small deterministic continuous-control tasks plus scripted
//!   controllers that generate demonstrations of tunable quality.
//! - [`buffers`]: the sample buffer, the return-ranked experience buffer and
//!   the mixed-ratio batch sampler.
//! - [`agent`]: deterministic actor, critic ensemble with random-subset-min
//!   targets and the behaviour-cloning penalised actor objective.
//! - [`harness`]: the outer training loop, evaluation, baselines,
//!   Q-error diagnostic and multi-seed comparison.
//!
//! With the `parallel` feature (default) the per-critic updates and the
//! multi-run comparison fan out over rayon. Without it, or with
//! [`agent::CriticMode::Sequential`], everything runs on the calling thread
//! and is bit-reproducible.

pub mod agent;
pub mod buffers;
pub mod envs;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod rng;

mod par;
mod textio;

pub use par::parallel_available;

pub use error::{Error, Result};
