use crate::agent::Actor;
use crate::buffers::Trajectory;
use crate::envs::{episode_seed, rollout, EnvSpec, Policy};
use crate::numerics::{Adam, AdamConfig, Real};
use crate::{Error, Result};

/// Returns of `n_episodes` rollouts; episode `i` starts from
/// `episode_seed(seed, i)`, the same derivation demo collection uses.
pub fn episode_returns(policy: &mut dyn Policy, spec: &EnvSpec, n_episodes: usize, seed: u64) -> Result<Vec<f64>> {
    if n_episodes == 0 {
        return Err(Error::Config("n_episodes must be at least 1".into()));
    }
    (0..n_episodes as u64).map(|i| Ok(rollout(spec, policy, episode_seed(seed, i))?.r_sum())).collect()
}

pub fn evaluate_policy(policy: &mut dyn Policy, spec: &EnvSpec, n_episodes: usize, seed: u64) -> Result<f64> {
    let r = episode_returns(policy, spec, n_episodes, seed)?;
    Ok(r.iter().sum::<f64>() / r.len() as f64)
}

/// Mean return of the noise-free actor. Touches no training state.
pub fn evaluate<T: Real>(actor: &Actor<T>, spec: &EnvSpec, n_episodes: usize, seed: u64) -> Result<f64> {
    evaluate_policy(&mut actor.greedy(), spec, n_episodes, seed)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BcReport {
    pub initial_mse: f64,
    pub final_mse: f64,
    pub epochs: usize,
}

/// Full-batch Adam regression of the online actor onto the demonstrated
/// actions (mean squared error over all transitions and action
/// dimensions). The target actor is reset to the result.
pub fn bc_pretrain<T: Real>(actor: &mut Actor<T>, demos: &[Trajectory], epochs: usize, lr: f64) -> Result<BcReport> {
    let rows: usize = demos.iter().map(Trajectory::len).sum();
    if rows == 0 {
        return Err(Error::Config("behaviour cloning needs at least one transition".into()));
    }
    let (sd, ad) = (actor.state_dim(), actor.action_dim());
    let mut states = Vec::with_capacity(rows * sd);
    let mut actions = Vec::with_capacity(rows * ad);
    for t in demos.iter().flat_map(|d| d.transitions()) {
        if t.s.len() != sd || t.a.len() != ad {
            return Err(Error::Config(format!(
                "demonstration dims {}/{} do not match actor {sd}/{ad}",
                t.s.len(),
                t.a.len()
            )));
        }
        states.extend(t.s.iter().map(|&x| T::of(x)));
        actions.extend(t.a.iter().map(|&x| T::of(x)));
    }
    let scale = 1.0 / (rows * ad) as f64;
    let mse = |a: &Actor<T>| -> Result<f64> {
        let p = a.act(&states, rows)?;
        Ok(p.iter().zip(&actions).map(|(&x, &y)| (x - y).f64().powi(2)).sum::<f64>() * scale)
    };
    let initial_mse = mse(actor)?;
    let mut opt = Adam::for_net(&actor.online, AdamConfig::with_lr(lr));
    let g_scale = T::of(2.0 * scale * actor.bound());
    for _ in 0..epochs {
        let (cache, pred) = actor.forward(&states, rows)?;
        let grad: Vec<T> = pred.iter().zip(&actions).map(|(&p, &a)| g_scale * (p - a)).collect();
        let g = actor.online.backward(&cache, &grad, true, false)?;
        opt.step(&mut actor.online, &g.params)?;
    }
    actor.target = actor.online.clone();
    Ok(BcReport { initial_mse, final_mse: mse(actor)?, epochs })
}
