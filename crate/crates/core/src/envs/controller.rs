use rand_distr::{Distribution, StandardNormal};

use super::{pendulum_angle, EnvId, EnvSpec, Policy, PENDULUM_G};
use crate::rng::Rng;
use crate::{Error, Result};

const POINT_KP: f64 = 3.0;
const POINT_KD: f64 = 3.0;
const PEND_KP: f64 = 10.0;
const PEND_KD: f64 = 2.0;
const PEND_PUMP: f64 = 0.5;
const PEND_CAPTURE_COS: f64 = 0.85;
const CHAIN_KP: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControllerKind {
    Expert,
    Imperfect,
}

/// Scripted demonstrator. The expert applies the reference law unchanged;
/// an imperfect controller scales it, shifts it by a bias and adds noise.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerSpec {
    pub kind: ControllerKind,
    pub gain_scale: f64,
    pub bias: Vec<f64>,
    pub noise_std: f64,
}

impl ControllerSpec {
    pub fn expert(action_dim: usize) -> Self {
        Self { kind: ControllerKind::Expert, gain_scale: 1.0, bias: vec![0.0; action_dim], noise_std: 0.0 }
    }

    pub fn imperfect(gain_scale: f64, bias: Vec<f64>, noise_std: f64) -> Result<Self> {
        let c = Self { kind: ControllerKind::Imperfect, gain_scale, bias, noise_std };
        c.validate()?;
        Ok(c)
    }

    /// Gain 0.5, noise 0.1, no bias.
    pub fn default_imperfect(action_dim: usize) -> Self {
        Self { kind: ControllerKind::Imperfect, gain_scale: 0.5, bias: vec![0.0; action_dim], noise_std: 0.1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain_scale > 0.0 && self.gain_scale <= 1.0) {
            return Err(Error::Config(format!("gain scale {} outside (0, 1]", self.gain_scale)));
        }
        if !(self.noise_std >= 0.0) || self.bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config("controller noise must be >= 0 and bias finite".into()));
        }
        if self.kind == ControllerKind::Expert
            && (self.gain_scale != 1.0 || self.noise_std != 0.0 || self.bias.iter().any(|&b| b != 0.0))
        {
            return Err(Error::Config("expert controller has unit gain, no bias and no noise".into()));
        }
        Ok(())
    }
}

/// The expert's command, saturated at the action bound.
///
/// Point mass: PD toward the goal. Pendulum: PD about upright inside the
/// capture region, energy pumping outside it. Chain: proportional push
/// toward the right end.
pub fn reference_law(spec: &EnvSpec, s: &[f64]) -> Vec<f64> {
    let law = match spec.id {
        EnvId::PointMass => (0..2).map(|k| POINT_KP * (s[4 + k] - s[k]) - POINT_KD * s[2 + k]).collect(),
        EnvId::Pendulum => {
            let th = pendulum_angle(s);
            let w = s[2];
            if s[0] > PEND_CAPTURE_COS {
                vec![-(PEND_KP * th + PEND_KD * w)]
            } else {
                // E = w^2/2 + 1.5 g (cos th - 1), zero at upright rest; dE/dt = 3 u w.
                let energy = 0.5 * w * w + 1.5 * PENDULUM_G * (s[0] - 1.0);
                let u = -PEND_PUMP * energy * w;
                if w.abs() < 1e-3 {
                    vec![spec.action_bound]
                } else {
                    vec![u]
                }
            }
        }
        EnvId::Chain => vec![CHAIN_KP * (1.0 - s[0])],
    };
    spec.clip_action(&law)
}

/// `clip(gain * law + bias + noise)`; the noise draw is skipped when its
/// standard deviation is zero, so the expert never touches `rng`.
pub fn controller_act(ctrl: &ControllerSpec, spec: &EnvSpec, state: &[f64], rng: &mut Rng) -> Vec<f64> {
    let law = reference_law(spec, state);
    let a: Vec<f64> = law
        .iter()
        .enumerate()
        .map(|(k, &u)| {
            let mut v = ctrl.gain_scale * u + ctrl.bias.get(k).copied().unwrap_or(0.0);
            if ctrl.noise_std > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                v += ctrl.noise_std * z;
            }
            v
        })
        .collect();
    spec.clip_action(&a)
}

pub struct ControllerPolicy {
    pub spec: ControllerSpec,
    rng: Rng,
}

impl ControllerPolicy {
    pub fn new(spec: ControllerSpec, rng: Rng) -> Self {
        Self { spec, rng }
    }
}

impl Policy for ControllerPolicy {
    fn act(&mut self, env: &EnvSpec, state: &[f64]) -> Result<Vec<f64>> {
        Ok(controller_act(&self.spec, env, state, &mut self.rng))
    }
}
