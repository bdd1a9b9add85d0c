//! The learner: deterministic actor, critic ensemble, exploration noise,
//! penalty schedule and the per-batch update.

mod actor;
mod checkpoint;
mod critic;
mod lambda;
mod noise;

use serde::{Deserialize, Serialize};

pub use actor::{Actor, GreedyPolicy, NoisyPolicy};
pub use checkpoint::AnyAgent;
pub use critic::{
    actor_loss_and_grads, concat_rows, critic_loss_and_grads, critic_targets, CriticEnsemble, TargetAction, TensorBatch,
};
pub use lambda::{LambdaMode, LambdaSchedule};
pub use noise::ExplorationNoise;

use crate::buffers::Batch;
use crate::numerics::{polyak_update, Adam, AdamConfig, Real};
use crate::par;
use crate::rng::{mix, stream, Rng, Stream};
use crate::{Error, Result};

/// How the independent per-critic updates are scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticMode {
    /// In index order on the calling thread; the reference for determinism.
    #[default]
    Sequential,
    /// On the rayon pool. Results are bit-identical to `Sequential` because
    /// every critic's update only reads shared inputs.
    Parallel,
}

impl CriticMode {
    pub fn is_parallel(self) -> bool {
        self == CriticMode::Parallel
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub state_dim: usize,
    pub action_dim: usize,
    pub action_bound: f64,
    pub hidden: Vec<usize>,
    pub n_critics: usize,
    pub subset_size: usize,
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub target_noise: ExplorationNoise,
    pub lambda: LambdaSchedule,
    pub critic_mode: CriticMode,
    pub target_action: TargetAction,
}

impl AgentConfig {
    /// Defaults for the given environment dimensions.
    pub fn for_dims(state_dim: usize, action_dim: usize, action_bound: f64) -> Self {
        Self {
            state_dim,
            action_dim,
            action_bound,
            hidden: vec![64, 64],
            n_critics: 10,
            subset_size: 2,
            gamma: 0.99,
            tau: 0.005,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            target_noise: ExplorationNoise::default(),
            lambda: LambdaSchedule::default(),
            critic_mode: CriticMode::Sequential,
            target_action: TargetAction::Target,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.state_dim == 0 || self.action_dim == 0 {
            return bad("state and action dimensions must be positive".into());
        }
        if self.hidden.contains(&0) {
            return bad(format!("hidden sizes must be positive, got {:?}", self.hidden));
        }
        if self.n_critics < 2 {
            return bad(format!("n_critics must be >= 2, got {}", self.n_critics));
        }
        if self.subset_size == 0 || self.subset_size > self.n_critics {
            return bad(format!("subset_size must lie in 1..={}, got {}", self.n_critics, self.subset_size));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad(format!("tau must lie in [0, 1], got {}", self.tau));
        }
        for (name, lr) in [("actor_lr", self.actor_lr), ("critic_lr", self.critic_lr)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(format!("{name} must be positive, got {lr}"));
            }
        }
        if !(self.action_bound > 0.0 && self.action_bound.is_finite()) {
            return bad(format!("action_bound must be positive, got {}", self.action_bound));
        }
        self.target_noise.validate()?;
        self.lambda.validate()
    }
}

/// Diagnostics of one update.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateMetrics {
    pub critic_losses: Vec<f64>,
    pub actor_loss: f64,
    pub lambda: f64,
    pub mean_target: f64,
    pub subset: Vec<usize>,
}

impl UpdateMetrics {
    pub fn mean_critic_loss(&self) -> f64 {
        self.critic_losses.iter().sum::<f64>() / self.critic_losses.len() as f64
    }
}

/// Learner state: networks, optimisers, update counter and the stream used
/// for subsets and target smoothing.
#[derive(Clone, Debug)]
pub struct Agent<T> {
    pub config: AgentConfig,
    pub actor: Actor<T>,
    pub critics: CriticEnsemble<T>,
    actor_opt: Adam<T>,
    critic_opts: Vec<Adam<T>>,
    updates: u64,
    rng: Rng,
}

impl<T: Real> Agent<T> {
    /// Networks are initialised from the `Init` stream of `seed`; the update
    /// randomness uses the `Agent` stream.
    pub fn new(config: AgentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let init = mix(seed, Stream::Init as u64);
        let actor = Actor::new(config.state_dim, config.action_dim, &config.hidden, config.action_bound, init)?;
        let critics = CriticEnsemble::new(
            config.state_dim,
            config.action_dim,
            &config.hidden,
            config.n_critics,
            config.subset_size,
            mix(init, 1),
        )?;
        Self::from_parts(config, actor, critics, stream(seed, Stream::Agent))
    }

    pub fn from_parts(config: AgentConfig, actor: Actor<T>, critics: CriticEnsemble<T>, rng: Rng) -> Result<Self> {
        config.validate()?;
        if critics.n() != config.n_critics || critics.m() != config.subset_size {
            return Err(Error::Config("ensemble size disagrees with config".into()));
        }
        if actor.state_dim() != config.state_dim
            || actor.action_dim() != config.action_dim
            || critics.input_dim() != config.state_dim + config.action_dim
        {
            return Err(Error::Shape("networks disagree with configured dimensions".into()));
        }
        let actor_opt = Adam::for_net(&actor.online, AdamConfig::with_lr(config.actor_lr));
        let critic_opts =
            critics.online.iter().map(|c| Adam::for_net(c, AdamConfig::with_lr(config.critic_lr))).collect();
        Ok(Self { config, actor, critics, actor_opt, critic_opts, updates: 0, rng })
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn rng(&self) -> &Rng {
        &self.rng
    }

    pub fn actor_optimizer(&self) -> &Adam<T> {
        &self.actor_opt
    }

    /// Mutable access for supervised pretraining of the online actor.
    pub fn actor_parts_mut(&mut self) -> (&mut Actor<T>, &mut Adam<T>) {
        (&mut self.actor, &mut self.actor_opt)
    }

    pub fn critic_optimizers(&self) -> &[Adam<T>] {
        &self.critic_opts
    }

    /// One learning step on `batch`, with the penalty weight taken at
    /// `step` of the schedule:
    ///
    /// 1. bootstrap targets with one fresh subset draw,
    /// 2. an Adam step for every critic against those targets,
    /// 3. an Adam step for the actor against the updated critics,
    /// 4. Polyak averaging of all target networks (skipped when `tau = 0`).
    pub fn update_step(&mut self, batch: &Batch, step: u64) -> Result<UpdateMetrics> {
        if batch.is_empty() || batch.state_dim != self.config.state_dim || batch.action_dim != self.config.action_dim {
            return Err(Error::Shape(format!(
                "batch of {} rows with dims {}/{} for agent {}/{}",
                batch.len(),
                batch.state_dim,
                batch.action_dim,
                self.config.state_dim,
                self.config.action_dim
            )));
        }
        let tb = TensorBatch::<T>::from_batch(batch);
        let (y, subset) = critic_targets(
            &self.critics,
            &self.actor,
            &tb,
            self.config.gamma,
            &self.config.target_noise,
            self.config.target_action,
            &mut self.rng,
        )?;
        let mean_target = y.iter().map(|v| v.f64()).sum::<f64>() / y.len() as f64;

        let input = concat_rows(&tb.states, &tb.actions, tb.rows, tb.state_dim, tb.action_dim);
        let parallel = self.config.critic_mode.is_parallel();
        let results = par::map_pairs_mut(parallel, &mut self.critics.online, &mut self.critic_opts, |net, opt| {
            let (loss, g) = critic_loss_and_grads(net, &input, &y)?;
            opt.step(net, &g)?;
            Ok::<f64, Error>(loss.f64())
        });
        let mut critic_losses = Vec::with_capacity(results.len());
        for (i, r) in results.into_iter().enumerate() {
            critic_losses.push(r.map_err(|e| annotate(e, &format!("critic {i}"), self.updates))?);
        }

        let lambda = self.config.lambda.value(step);
        let (actor_loss, g) = actor_loss_and_grads(&self.critics, &self.actor, &tb, lambda, parallel)
            .map_err(|e| annotate(e, "actor", self.updates))?;
        self.actor_opt.step(&mut self.actor.online, &g).map_err(|e| annotate(e, "actor", self.updates))?;

        if self.config.tau > 0.0 {
            let tau = self.config.tau;
            polyak_update(&mut self.actor.target, &self.actor.online, tau)?;
            for (t, o) in self.critics.target.iter_mut().zip(&self.critics.online) {
                polyak_update(t, o, tau)?;
            }
        }
        self.updates += 1;
        Ok(UpdateMetrics { critic_losses, actor_loss: actor_loss.f64(), lambda, mean_target, subset })
    }
}

fn annotate(e: Error, who: &str, update: u64) -> Error {
    match e {
        Error::NonFinite { layer, what } => {
            Error::Numeric(format!("{who} update {update}: non-finite {what} in layer {layer}"))
        }
        Error::Numeric(m) => Error::Numeric(format!("{who} update {update}: {m}")),
        other => other,
    }
}
