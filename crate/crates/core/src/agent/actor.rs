use super::noise::ExplorationNoise;
use crate::envs::{EnvSpec, Policy};
use crate::numerics::{Activation, ForwardCache, Mlp, Real};
use crate::rng::Rng;
use crate::{Error, Result};

/// Deterministic policy: a tanh network scaled by the action bound, plus a
/// target copy for smoothed bootstrap targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Actor<T> {
    pub online: Mlp<T>,
    pub target: Mlp<T>,
    bound: f64,
}

impl<T: Real> Actor<T> {
    pub fn new(state_dim: usize, action_dim: usize, hidden: &[usize], bound: f64, seed: u64) -> Result<Self> {
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(action_dim);
        let online = Mlp::new(&sizes, Activation::Relu, Activation::Tanh, seed)?;
        Self::from_nets(online.clone(), online, bound)
    }

    pub fn from_nets(online: Mlp<T>, target: Mlp<T>, bound: f64) -> Result<Self> {
        if !online.same_shape(&target) {
            return Err(Error::Shape("actor target differs in shape from online net".into()));
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::Config(format!("action bound must be positive, got {bound}")));
        }
        if online.activations().last() != Some(&Activation::Tanh) {
            return Err(Error::Config("actor output layer must be tanh".into()));
        }
        Ok(Self { online, target, bound })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn state_dim(&self) -> usize {
        self.online.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.online.output_dim()
    }

    fn scale(&self, mut raw: Vec<T>) -> Vec<T> {
        let b = T::of(self.bound);
        raw.iter_mut().for_each(|x| *x = *x * b);
        raw
    }

    /// Online actions for `batch` states.
    pub fn act(&self, states: &[T], batch: usize) -> Result<Vec<T>> {
        Ok(self.scale(self.online.predict(states, batch)?))
    }

    pub fn act_target(&self, states: &[T], batch: usize) -> Result<Vec<T>> {
        Ok(self.scale(self.target.predict(states, batch)?))
    }

    /// Online forward pass keeping the cache for a later backward pass.
    pub(crate) fn forward(&self, states: &[T], batch: usize) -> Result<(ForwardCache<T>, Vec<T>)> {
        let cache = self.online.forward(states, batch)?;
        let actions = self.scale(cache.output().to_vec());
        Ok((cache, actions))
    }

    /// `clip(pi(s) + clip(N(0, sigma), -c, c), ±bound)`. With `sigma = 0`
    /// this is the deterministic evaluation policy and no randomness is used.
    pub fn select_action(&self, state: &[f64], noise: &ExplorationNoise, rng: &mut Rng) -> Result<Vec<f64>> {
        if state.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite state passed to the actor".into()));
        }
        let s: Vec<T> = state.iter().map(|&x| T::of(x)).collect();
        let a = self.act(&s, 1)?;
        Ok(a.into_iter()
            .map(|x| {
                let eps = if noise.sigma > 0.0 { noise.sample(rng) } else { 0.0 };
                (x.f64() + eps).clamp(-self.bound, self.bound)
            })
            .collect())
    }

    /// Borrowing adapter that acts deterministically.
    pub fn greedy(&self) -> GreedyPolicy<'_, T> {
        GreedyPolicy { actor: self }
    }
}

/// The actor's noise-free policy.
pub struct GreedyPolicy<'a, T> {
    actor: &'a Actor<T>,
}

impl<T: Real> Policy for GreedyPolicy<'_, T> {
    fn act(&mut self, spec: &EnvSpec, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.actor.state_dim() || spec.action_dim != self.actor.action_dim() {
            return Err(Error::Shape(format!(
                "actor {}->{} used on env {} ({}->{})",
                self.actor.state_dim(),
                self.actor.action_dim(),
                spec.id,
                spec.state_dim,
                spec.action_dim
            )));
        }
        let s: Vec<T> = state.iter().map(|&x| T::of(x)).collect();
        Ok(self.actor.act(&s, 1)?.into_iter().map(|x| x.f64()).collect())
    }
}

/// Actor with exploration noise drawn from its own stream.
pub struct NoisyPolicy<'a, T> {
    pub actor: &'a Actor<T>,
    pub noise: ExplorationNoise,
    pub rng: &'a mut Rng,
}

impl<T: Real> Policy for NoisyPolicy<'_, T> {
    fn act(&mut self, _spec: &EnvSpec, state: &[f64]) -> Result<Vec<f64>> {
        self.actor.select_action(state, &self.noise, self.rng)
    }
}
