//! Deterministic dense-reward control tasks and scripted controllers.
//!
//! | id           | state                         | action     | dt   | steps |
//! |--------------|-------------------------------|------------|------|-------|
//! | `pointmass`  | pos (2), vel (2), goal (2)    | force, ±1  | 0.1  | 100   |
//! | `pendulum`   | cos θ, sin θ, ω               | torque, ±2 | 0.05 | 200   |
//! | `chain`      | x / 4 for x in {0..4}         | move, ±1   | 1    | 20    |
//!
//! `chain` is a five-state fixture whose value function can be computed
//! exactly; it backs the Q-error diagnostic checks.
//!
//! Episodes end only at the time limit. Dynamics are explicit Euler.

mod controller;
mod rollout;

use std::fmt;
use std::str::FromStr;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use controller::{controller_act, ControllerKind, ControllerPolicy, ControllerSpec};
pub use rollout::{collect_demos, episode_seed, rollout, Policy, UniformPolicy};

/// Point mass: positions are confined to `[-ARENA, ARENA]`.
pub const POINT_ARENA: f64 = 2.0;
pub const POINT_MAX_SPEED: f64 = 2.0;
pub const PENDULUM_MAX_SPEED: f64 = 8.0;
const PENDULUM_G: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvId {
    #[serde(alias = "pointmass2d")]
    PointMass,
    #[serde(alias = "pendulumswingup")]
    Pendulum,
    Chain,
}

impl EnvId {
    pub fn name(self) -> &'static str {
        match self {
            EnvId::PointMass => "pointmass",
            EnvId::Pendulum => "pendulum",
            EnvId::Chain => "chain",
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pointmass" | "pointmass2d" => Ok(EnvId::PointMass),
            "pendulum" | "pendulumswingup" => Ok(EnvId::Pendulum),
            "chain" => Ok(EnvId::Chain),
            other => Err(Error::Config(format!("unknown environment `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpec {
    pub id: EnvId,
    pub state_dim: usize,
    pub action_dim: usize,
    pub action_bound: f64,
    pub max_episode_steps: usize,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub state: Vec<f64>,
    pub step: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub next: EnvState,
    pub reward: f64,
    pub done: bool,
}

impl EnvSpec {
    pub fn new(id: EnvId) -> Self {
        match id {
            EnvId::PointMass => {
                Self { id, state_dim: 6, action_dim: 2, action_bound: 1.0, max_episode_steps: 100, dt: 0.1 }
            }
            EnvId::Pendulum => {
                Self { id, state_dim: 3, action_dim: 1, action_bound: 2.0, max_episode_steps: 200, dt: 0.05 }
            }
            EnvId::Chain => Self { id, state_dim: 1, action_dim: 1, action_bound: 1.0, max_episode_steps: 20, dt: 1.0 },
        }
    }

    pub fn with_max_steps(mut self, steps: usize) -> Self {
        self.max_episode_steps = steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = EnvSpec::new(self.id);
        if self.state_dim != d.state_dim || self.action_dim != d.action_dim {
            return Err(Error::Config(format!("{} has fixed dimensions", self.id)));
        }
        if self.max_episode_steps == 0 || !(self.action_bound > 0.0) || !(self.dt > 0.0) {
            return Err(Error::Config(format!("invalid environment spec {self:?}")));
        }
        Ok(())
    }

    /// Upper bound on `|reward|` for any reachable state and clipped action.
    pub fn reward_bound(&self) -> f64 {
        let b2 = self.action_bound * self.action_bound * self.action_dim as f64;
        match self.id {
            // |pos - goal| <= sqrt(2) * (ARENA + 1) since goals lie in [-1, 1]^2
            EnvId::PointMass => 2f64.sqrt() * (POINT_ARENA + 1.0) + 0.01 * b2,
            EnvId::Pendulum => {
                let pi2 = std::f64::consts::PI * std::f64::consts::PI;
                pi2 + 0.1 * PENDULUM_MAX_SPEED * PENDULUM_MAX_SPEED + 0.001 * b2
            }
            EnvId::Chain => 1.0,
        }
    }

    /// Initial state for `seed`:
    /// point mass positions and goals uniform in `[-1, 1]^2`, velocity zero;
    /// pendulum angle uniform in `[-π, π)`, angular velocity uniform in `[-1, 1]`;
    /// chain position uniform in `{0, .., 4}`.
    pub fn reset(&self, seed: u64) -> EnvState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = match self.id {
            EnvId::PointMass => {
                let mut s = vec![0.0; 6];
                s[0] = rng.random_range(-1.0..1.0);
                s[1] = rng.random_range(-1.0..1.0);
                s[4] = rng.random_range(-1.0..1.0);
                s[5] = rng.random_range(-1.0..1.0);
                s
            }
            EnvId::Pendulum => {
                let th: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                let w: f64 = rng.random_range(-1.0..1.0);
                vec![th.cos(), th.sin(), w]
            }
            EnvId::Chain => vec![rng.random_range(0..5u32) as f64 / 4.0],
        };
        EnvState { state, step: 0, seed }
    }

    pub fn clip_action(&self, action: &[f64]) -> Vec<f64> {
        let b = self.action_bound;
        action.iter().map(|a| a.clamp(-b, b)).collect()
    }

    /// Advances one step. Actions are clipped to the bound before the
    /// dynamics; `done` is raised exactly when the step counter reaches the
    /// time limit. Stepping past the limit keeps integrating, which the
    /// Monte-Carlo diagnostic relies on.
    pub fn step(&self, state: &EnvState, action: &[f64]) -> Result<StepOutcome> {
        if action.len() != self.action_dim || state.state.len() != self.state_dim {
            return Err(Error::Shape(format!(
                "{}: action {} / state {} for dims {} / {}",
                self.id,
                action.len(),
                state.state.len(),
                self.action_dim,
                self.state_dim
            )));
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::Numeric(format!("non-finite action {action:?}")));
        }
        let a = self.clip_action(action);
        let s = &state.state;
        let (next, reward) = match self.id {
            EnvId::PointMass => point_mass_step(self.dt, s, &a),
            EnvId::Pendulum => pendulum_step(self.dt, s, a[0]),
            EnvId::Chain => chain_step(s, a[0]),
        };
        let step = state.step + 1;
        Ok(StepOutcome {
            next: EnvState { state: next, step, seed: state.seed },
            reward,
            done: step == self.max_episode_steps,
        })
    }
}

fn point_mass_step(dt: f64, s: &[f64], a: &[f64]) -> (Vec<f64>, f64) {
    let mut n = s.to_vec();
    for k in 0..2 {
        let mut p = s[k] + dt * s[2 + k];
        let mut v = (s[2 + k] + dt * a[k]).clamp(-POINT_MAX_SPEED, POINT_MAX_SPEED);
        if p.abs() > POINT_ARENA {
            p = p.clamp(-POINT_ARENA, POINT_ARENA);
            v = 0.0;
        }
        n[k] = p;
        n[2 + k] = v;
    }
    let dist = ((n[0] - n[4]).powi(2) + (n[1] - n[5]).powi(2)).sqrt();
    let effort = a[0] * a[0] + a[1] * a[1];
    (n, -dist - 0.01 * effort)
}

/// Angle in `(-π, π]` measured from upright.
pub fn pendulum_angle(s: &[f64]) -> f64 {
    s[1].atan2(s[0])
}

fn pendulum_step(dt: f64, s: &[f64], u: f64) -> (Vec<f64>, f64) {
    let th = pendulum_angle(s);
    let w = s[2];
    // unit mass and length
    let acc = 1.5 * PENDULUM_G * th.sin() + 3.0 * u;
    let th_next = th + dt * w;
    let w_next = (w + dt * acc).clamp(-PENDULUM_MAX_SPEED, PENDULUM_MAX_SPEED);
    let n = vec![th_next.cos(), th_next.sin(), w_next];
    let ang = pendulum_angle(&n);
    (n, -(ang * ang + 0.1 * w_next * w_next + 0.001 * u * u))
}

/// Reward is the current position `x / 4`; a positive action moves right,
/// a negative one left, zero stays.
fn chain_step(s: &[f64], a: f64) -> (Vec<f64>, f64) {
    let x = (s[0] * 4.0).round();
    let moved = if a > 0.0 {
        (x + 1.0).min(4.0)
    } else if a < 0.0 {
        (x - 1.0).max(0.0)
    } else {
        x
    };
    (vec![moved / 4.0], x / 4.0)
}
