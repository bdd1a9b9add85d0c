use rand::Rng as _;

use super::{ControllerPolicy, ControllerSpec, EnvSpec};
use crate::buffers::{Trajectory, Transition};
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Anything that maps an observation to an action.
pub trait Policy {
    fn act(&mut self, spec: &EnvSpec, state: &[f64]) -> Result<Vec<f64>>;
}

/// Uniform random actions within the bound.
pub struct UniformPolicy {
    rng: Rng,
}

impl UniformPolicy {
    pub fn new(rng: Rng) -> Self {
        Self { rng }
    }

    pub fn sample(spec: &EnvSpec, rng: &mut Rng) -> Vec<f64> {
        let b = spec.action_bound;
        (0..spec.action_dim).map(|_| rng.random_range(-b..=b)).collect()
    }
}

impl Policy for UniformPolicy {
    fn act(&mut self, spec: &EnvSpec, _state: &[f64]) -> Result<Vec<f64>> {
        Ok(Self::sample(spec, &mut self.rng))
    }
}

/// Reset seed of episode `index` in a batch of episodes keyed by `base`.
/// Demonstration collection and evaluation share this derivation.
pub fn episode_seed(base: u64, index: u64) -> u64 {
    rng::mix(base, index)
}

/// One full episode from `spec.reset(seed)` until the time limit.
pub fn rollout(spec: &EnvSpec, policy: &mut dyn Policy, seed: u64) -> Result<Trajectory> {
    let mut st = spec.reset(seed);
    let mut transitions = Vec::with_capacity(spec.max_episode_steps);
    loop {
        let a = spec.clip_action(&policy.act(spec, &st.state)?);
        let out = spec.step(&st, &a)?;
        transitions.push(Transition { s: st.state, a, r: out.reward, s_next: out.next.state.clone(), done: out.done });
        if out.done {
            break;
        }
        st = out.next;
    }
    Trajectory::new(transitions)
}

const NOISE_SALT: u64 = 0xC0_77_20_11;

/// `n_traj` full episodes of the scripted controller. Episode `i` starts
/// from `episode_seed(seed, i)`; controller noise has its own stream.
pub fn collect_demos(spec: &EnvSpec, ctrl: &ControllerSpec, n_traj: usize, seed: u64) -> Result<Vec<Trajectory>> {
    if n_traj == 0 {
        return Err(Error::Config("n_traj must be at least 1".into()));
    }
    ctrl.validate()?;
    if ctrl.bias.len() != spec.action_dim {
        return Err(Error::Config(format!(
            "controller bias has {} entries for action dim {}",
            ctrl.bias.len(),
            spec.action_dim
        )));
    }
    (0..n_traj as u64)
        .map(|i| {
            let noise = rng::stream(rng::mix(seed ^ NOISE_SALT, i), rng::Stream::Explore);
            let mut policy = ControllerPolicy::new(ctrl.clone(), noise);
            rollout(spec, &mut policy, episode_seed(seed, i))
        })
        .collect()
}
