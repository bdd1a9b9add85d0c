//! Replay storage: the transition-level sample buffer, the trajectory-level
//! experience buffer that only admits episodes beating its current minimum
//! return, the per-episode accumulator and the mixed-ratio batch sampler.

mod experience;
mod sample;
mod sampler;
mod trajfile;

use crate::{Error, Result};

pub use experience::ExperienceBuffer;
pub use sample::SampleBuffer;
pub use sampler::{mixed_sample, split_counts, Batch, Source};
pub use trajfile::{read_trajectories, write_trajectories, TrajectoryFile};

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub done: bool,
}

impl Transition {
    pub fn is_finite(&self) -> bool {
        self.r.is_finite() && self.s.iter().chain(&self.a).chain(&self.s_next).all(|v| v.is_finite())
    }

    pub(crate) fn check_dims(&self, state_dim: usize, action_dim: usize) -> Result<()> {
        if self.s.len() != state_dim || self.s_next.len() != state_dim || self.a.len() != action_dim {
            return Err(Error::Shape(format!(
                "transition dims ({}, {}, {}) for state {state_dim} / action {action_dim}",
                self.s.len(),
                self.a.len(),
                self.s_next.len()
            )));
        }
        Ok(())
    }
}

/// An episode with its cached undiscounted return.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    transitions: Vec<Transition>,
    r_sum: f64,
}

fn fold_rewards(ts: &[Transition]) -> f64 {
    ts.iter().fold(0.0, |acc, t| acc + t.r)
}

impl Trajectory {
    /// Validates and caches the return.
    pub fn new(transitions: Vec<Transition>) -> Result<Self> {
        let r_sum = fold_rewards(&transitions);
        let t = Self { transitions, r_sum };
        t.validate()?;
        Ok(t)
    }

    /// No validation; pairs a transition list with an arbitrary cached
    /// return. Consumers call [`Trajectory::validate`] before trusting it.
    pub fn from_raw(transitions: Vec<Transition>, r_sum: f64) -> Self {
        Self { transitions, r_sum }
    }

    /// Non-empty, finite, uniformly shaped, chained (`s_next` of step t equals
    /// `s` of step t + 1) and with a cached return equal to the recomputed sum.
    pub fn validate(&self) -> Result<()> {
        let first = self.transitions.first().ok_or_else(|| Error::Validation("empty trajectory".into()))?;
        let (sd, ad) = (first.s.len(), first.a.len());
        for (k, t) in self.transitions.iter().enumerate() {
            t.check_dims(sd, ad).map_err(|e| Error::Validation(format!("step {k}: {e}")))?;
            if !t.is_finite() {
                return Err(Error::Validation(format!("step {k} holds a non-finite value")));
            }
        }
        if let Some(k) = self.transitions.windows(2).position(|w| w[0].s_next != w[1].s) {
            return Err(Error::Validation(format!("steps {k} and {} do not chain", k + 1)));
        }
        let recomputed = fold_rewards(&self.transitions);
        if recomputed != self.r_sum {
            return Err(Error::Validation(format!(
                "cached return {} differs from recomputed {recomputed}",
                self.r_sum
            )));
        }
        Ok(())
    }

    pub fn r_sum(&self) -> f64 {
        self.r_sum
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.transitions.first().map_or(0, |t| t.s.len())
    }

    pub fn action_dim(&self) -> usize {
        self.transitions.first().map_or(0, |t| t.a.len())
    }
}

/// Transitions of the episode in progress.
#[derive(Clone, Debug, Default)]
pub struct TrajectoryAccumulator {
    transitions: Vec<Transition>,
}

impl TrajectoryAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
    }

    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Closes the episode, leaving the accumulator empty.
    pub fn finish(&mut self) -> Result<Trajectory> {
        Trajectory::new(std::mem::take(&mut self.transitions))
    }
}
