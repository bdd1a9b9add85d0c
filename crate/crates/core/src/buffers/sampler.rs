use rand::Rng as _;

use super::{ExperienceBuffer, SampleBuffer, Transition};
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Experience,
    Sample,
}

/// A mini-batch in structure-of-arrays layout (row-major matrices).
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub state_dim: usize,
    pub action_dim: usize,
    pub states: Vec<f64>,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<f64>,
    pub dones: Vec<bool>,
    pub sources: Vec<Source>,
}

impl Batch {
    pub fn with_capacity(rows: usize, state_dim: usize, action_dim: usize) -> Self {
        Self {
            state_dim,
            action_dim,
            states: Vec::with_capacity(rows * state_dim),
            actions: Vec::with_capacity(rows * action_dim),
            rewards: Vec::with_capacity(rows),
            next_states: Vec::with_capacity(rows * state_dim),
            dones: Vec::with_capacity(rows),
            sources: Vec::with_capacity(rows),
        }
    }

    pub fn from_transitions<'a>(
        rows: impl IntoIterator<Item = &'a Transition>,
        state_dim: usize,
        action_dim: usize,
        source: Source,
    ) -> Self {
        let mut b = Self::with_capacity(0, state_dim, action_dim);
        for t in rows {
            b.push(t, source);
        }
        b
    }

    pub fn push(&mut self, t: &Transition, source: Source) {
        self.states.extend_from_slice(&t.s);
        self.actions.extend_from_slice(&t.a);
        self.rewards.push(t.r);
        self.next_states.extend_from_slice(&t.s_next);
        self.dones.push(t.done);
        self.sources.push(source);
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn count(&self, source: Source) -> usize {
        self.sources.iter().filter(|&&s| s == source).count()
    }
}

/// `(round(alpha * b), b - round(alpha * b))`.
pub fn split_counts(b: usize, alpha: f64) -> (usize, usize) {
    let n_e = ((alpha * b as f64).round() as usize).min(b);
    (n_e, b - n_e)
}

/// Draws `round(alpha * b)` rows uniformly with replacement over the
/// experience buffer's flattened transitions, then the remainder uniformly
/// with replacement from the sample buffer.
///
/// Returns [`Error::NotReady`] while the sample buffer holds fewer than `b`
/// transitions or when experience rows are requested from an absent buffer.
pub fn mixed_sample(
    be: Option<&ExperienceBuffer>,
    bm: &SampleBuffer,
    b: usize,
    alpha: f64,
    rng: &mut Rng,
) -> Result<Batch> {
    if !(0.0..=1.0).contains(&alpha) || b == 0 {
        return Err(Error::Config(format!("batch {b} / alpha {alpha} out of range")));
    }
    if bm.len() < b {
        return Err(Error::NotReady(format!("sample buffer holds {} of {b}", bm.len())));
    }
    let (n_e, n_m) = split_counts(b, alpha);
    let first = bm.get(0);
    let mut batch = Batch::with_capacity(b, first.s.len(), first.a.len());
    if n_e > 0 {
        let be =
            be.filter(|e| e.n_transitions() > 0).ok_or_else(|| Error::NotReady("experience buffer is empty".into()))?;
        let total = be.n_transitions();
        for _ in 0..n_e {
            batch.push(be.transition(rng.random_range(0..total)), Source::Experience);
        }
    }
    for _ in 0..n_m {
        batch.push(bm.get(rng.random_range(0..bm.len())), Source::Sample);
    }
    Ok(batch)
}
