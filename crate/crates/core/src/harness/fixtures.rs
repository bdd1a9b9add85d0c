//! Hand-built agents with known value functions.

use crate::agent::{Actor, Agent, AgentConfig, CriticEnsemble};
use crate::envs::{EnvId, EnvSpec};
use crate::numerics::{Activation, Mlp};
use crate::rng::{stream, Stream};
use crate::Result;

/// Agent on the chain whose critics compute `Q(s, a) = s` exactly, which is
/// the chain's one-step reward. With `gamma = 0` the Q-error is zero.
///
/// The actor always pushes right (`tanh(2) * bound`).
pub fn chain_reward_agent(gamma: f64) -> Result<Agent<f64>> {
    let spec = EnvSpec::new(EnvId::Chain);
    let config = AgentConfig { hidden: vec![2], n_critics: 2, gamma, ..AgentConfig::for_dims(1, 1, spec.action_bound) };
    // relu(s) - relu(-s) = s on both branches.
    let critic = Mlp::from_parts(
        &[2, 2, 1],
        &[Activation::Relu, Activation::Identity],
        vec![1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0],
    )?;
    let pi =
        Mlp::from_parts(&[1, 2, 1], &[Activation::Relu, Activation::Tanh], vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0])?;
    let actor = Actor::from_nets(pi.clone(), pi, spec.action_bound)?;
    let critics = CriticEnsemble::from_nets(vec![critic.clone(); 2], vec![critic; 2], 2)?;
    Agent::from_parts(config, actor, critics, stream(0, Stream::Agent))
}
