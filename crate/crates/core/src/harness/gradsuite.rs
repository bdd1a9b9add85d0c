use rand::Rng as _;

use crate::agent::{actor_loss_and_grads, critic_loss_and_grads, Actor, CriticEnsemble, TensorBatch};
use crate::numerics::{grad_check, Activation, Mlp};
use crate::rng::{mix, stream, Rng, Stream};
use crate::Result;

/// Finite-difference step used by the suite.
pub const FD_STEP: f64 = 1e-5;

/// Worst relative errors of one gradient family over all instances.
#[derive(Clone, Debug, PartialEq)]
pub struct GradFamily {
    pub name: &'static str,
    pub instances: usize,
    pub max_rel_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradSuiteReport {
    pub families: Vec<GradFamily>,
}

impl GradSuiteReport {
    pub fn max_rel_error(&self) -> f64 {
        self.families.iter().map(|f| f.max_rel_error).fold(0.0, f64::max)
    }

    pub fn instances(&self) -> usize {
        self.families.iter().map(|f| f.instances).sum()
    }
}

fn uniform(rng: &mut Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-r..r)).collect()
}

/// Random instances start from zero biases, where a layer of dead ReLUs
/// leaves the next pre-activation exactly on the kink; jitter moves every
/// parameter off such points.
fn jitter(net: &mut Mlp<f64>, rng: &mut Rng) {
    net.params_mut().iter_mut().for_each(|p| *p += rng.random_range(-0.1..0.1));
}

fn random_batch(rng: &mut Rng, rows: usize, sd: usize, ad: usize) -> TensorBatch<f64> {
    TensorBatch {
        rows,
        state_dim: sd,
        action_dim: ad,
        states: uniform(rng, rows * sd, 1.0),
        actions: uniform(rng, rows * ad, 1.0),
        rewards: uniform(rng, rows, 1.0),
        next_states: uniform(rng, rows * sd, 1.0),
    }
}

/// Checks, on `instances` randomized problems per family, the network
/// backward pass, the critic regression loss and the penalised actor loss
/// (including the path through the critics' action inputs) against central
/// finite differences in 64-bit arithmetic.
pub fn gradient_suite(instances: usize, seed: u64) -> Result<GradSuiteReport> {
    let mut rng = stream(seed, Stream::Init);
    let mut mlp = GradFamily { name: "mlp backward", instances, max_rel_error: 0.0 };
    let mut critic = GradFamily { name: "critic loss", instances, max_rel_error: 0.0 };
    let mut actor = GradFamily { name: "actor loss", instances, max_rel_error: 0.0 };
    for k in 0..instances as u64 {
        let s = mix(seed, k);
        let sd = rng.random_range(1..5usize);
        let ad = rng.random_range(1..3usize);
        let h = rng.random_range(3..9usize);
        let rows = rng.random_range(1..9usize);

        let hidden = [Activation::Relu, Activation::Tanh][k as usize % 2];
        let mut net = Mlp::<f64>::new(&[sd, h, h, 2], hidden, Activation::Identity, s)?;
        jitter(&mut net, &mut rng);
        let x = uniform(&mut rng, rows * sd, 1.5);
        let w = uniform(&mut rng, rows * 2, 1.0);
        let cache = net.forward(&x, rows)?;
        let g = net.backward(&cache, &w, true, false)?;
        let loss = |p: &[f64]| -> Result<f64> {
            let mut n = net.clone();
            n.params_mut().copy_from_slice(p);
            Ok(n.predict(&x, rows)?.iter().zip(&w).map(|(a, b)| a * b).sum())
        };
        mlp.max_rel_error = mlp.max_rel_error.max(grad_check(loss, net.params(), &g.params, FD_STEP)?.max_rel_error);

        let n_critics = rng.random_range(2..5usize);
        let mut ens = CriticEnsemble::<f64>::new(sd, ad, &[h], n_critics, 1, mix(s, 1))?;
        ens.online.iter_mut().for_each(|c| jitter(c, &mut rng));
        let batch = random_batch(&mut rng, rows, sd, ad);
        let input = crate::agent::concat_rows(&batch.states, &batch.actions, rows, sd, ad);
        let c0 = &ens.online[0];
        let (_, gc) = critic_loss_and_grads(c0, &input, &batch.rewards)?;
        let loss = |p: &[f64]| -> Result<f64> {
            let mut n = c0.clone();
            n.params_mut().copy_from_slice(p);
            Ok(critic_loss_and_grads(&n, &input, &batch.rewards)?.0)
        };
        critic.max_rel_error = critic.max_rel_error.max(grad_check(loss, c0.params(), &gc, FD_STEP)?.max_rel_error);

        let mut pi = Actor::<f64>::new(sd, ad, &[h], rng.random_range(0.5..2.0), mix(s, 2))?;
        jitter(&mut pi.online, &mut rng);
        let lambda = if k % 3 == 0 { 0.0 } else { rng.random_range(0.0..3.0) };
        let (_, ga) = actor_loss_and_grads(&ens, &pi, &batch, lambda, false)?;
        let loss = |p: &[f64]| -> Result<f64> {
            let mut a = pi.clone();
            a.online.params_mut().copy_from_slice(p);
            Ok(actor_loss_and_grads(&ens, &a, &batch, lambda, false)?.0)
        };
        actor.max_rel_error =
            actor.max_rel_error.max(grad_check(loss, pi.online.params(), &ga, FD_STEP)?.max_rel_error);
    }
    Ok(GradSuiteReport { families: vec![mlp, critic, actor] })
}
