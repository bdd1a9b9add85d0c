use rand::seq::index;
use rand::RngCore;

use crate::agent::Agent;
use crate::envs::{rollout, EnvSpec, EnvState, Policy};
use crate::numerics::Real;
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct StateError {
    pub state: Vec<f64>,
    pub q: f64,
    pub mc_return: f64,
}

impl StateError {
    pub fn abs_error(&self) -> f64 {
        (self.q - self.mc_return).abs()
    }
}

/// Result of comparing the ensemble's value estimate against Monte-Carlo
/// returns of the current greedy policy.
#[derive(Clone, Debug, PartialEq)]
pub struct QErrorReport {
    pub mean_abs_error: f64,
    pub states: Vec<StateError>,
    pub horizon: usize,
    /// `gamma^H * r_max / (1 - gamma)`: the largest possible contribution
    /// of rewards beyond the truncation horizon.
    pub tail_bound: f64,
}

/// Discounted return of the greedy policy started at `state`, truncated
/// after `horizon` steps. The episode time limit is ignored.
pub fn discounted_return(
    spec: &EnvSpec,
    policy: &mut dyn Policy,
    state: &[f64],
    gamma: f64,
    horizon: usize,
) -> Result<f64> {
    let mut st = EnvState { state: state.to_vec(), step: 0, seed: 0 };
    let (mut g, mut disc) = (0.0, 1.0);
    for _ in 0..horizon {
        let a = policy.act(spec, &st.state)?;
        let out = spec.step(&st, &a)?;
        g += disc * out.reward;
        disc *= gamma;
        st = out.next;
    }
    Ok(g)
}

pub fn tail_bound(gamma: f64, horizon: usize, r_max: f64) -> f64 {
    if gamma >= 1.0 {
        return f64::INFINITY;
    }
    gamma.powi(horizon as i32) * r_max / (1.0 - gamma)
}

/// Mean `|mean_i Q_i(s, pi(s)) - G(s)|` over `n_states` states visited by
/// the greedy policy, where `G(s)` is the truncated Monte-Carlo return.
pub fn q_error_diagnostic<T: Real>(
    agent: &Agent<T>,
    spec: &EnvSpec,
    n_states: usize,
    horizon: usize,
    rng: &mut Rng,
) -> Result<QErrorReport> {
    if n_states == 0 {
        return Err(Error::Config("n_states must be at least 1".into()));
    }
    let gamma = agent.config.gamma;
    let mut pool: Vec<Vec<f64>> = Vec::new();
    while pool.len() < n_states {
        let t = rollout(spec, &mut agent.actor.greedy(), rng.next_u64())?;
        pool.extend(t.transitions().iter().map(|tr| tr.s.clone()));
    }
    let picks = index::sample(rng, pool.len(), n_states);
    let mut states = Vec::with_capacity(n_states);
    for i in picks {
        let s = &pool[i];
        let st: Vec<T> = s.iter().map(|&x| T::of(x)).collect();
        let a = agent.actor.act(&st, 1)?;
        let q = agent.critics.actor_q_mean(&st, &a)?.f64();
        let g = discounted_return(spec, &mut agent.actor.greedy(), s, gamma, horizon)?;
        states.push(StateError { state: s.clone(), q, mc_return: g });
    }
    let mean_abs_error = states.iter().map(StateError::abs_error).sum::<f64>() / n_states as f64;
    if !mean_abs_error.is_finite() {
        return Err(Error::Numeric("Q-error diagnostic produced a non-finite value".into()));
    }
    Ok(QErrorReport { mean_abs_error, states, horizon, tail_bound: tail_bound(gamma, horizon, spec.reward_bound()) })
}
