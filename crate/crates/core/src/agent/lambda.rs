use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaMode {
    Linear,
    Exponential,
}

/// Weight of the behaviour-cloning penalty as a function of the step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSchedule {
    pub init: f64,
    pub min: f64,
    /// Steps over which the weight decays; zero keeps it at `init`.
    pub decay_steps: u64,
    pub mode: LambdaMode,
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        Self { init: 1.0, min: 0.05, decay_steps: 0, mode: LambdaMode::Linear }
    }
}

impl LambdaSchedule {
    /// Penalty switched off.
    pub fn zero() -> Self {
        Self { init: 0.0, min: 0.0, decay_steps: 0, mode: LambdaMode::Linear }
    }

    pub fn constant(v: f64) -> Self {
        Self { init: v, min: v, decay_steps: 0, mode: LambdaMode::Linear }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.init >= 0.0 && self.min >= 0.0 && self.min <= self.init) || !self.init.is_finite() {
            return Err(Error::Config(format!(
                "lambda schedule needs 0 <= min <= init (got init {}, min {})",
                self.init, self.min
            )));
        }
        Ok(())
    }

    /// Linear: `max(min, init * (1 - step / decay_steps))`.
    /// Exponential: `max(min, init * rho^step)` where `rho` brings `init` to
    /// `max(min, init / 100)` after `decay_steps`.
    pub fn value(&self, step: u64) -> f64 {
        if self.decay_steps == 0 || self.init == 0.0 {
            return self.init;
        }
        let decayed = match self.mode {
            LambdaMode::Linear => {
                let frac = (step as f64 / self.decay_steps as f64).min(1.0);
                self.init * (1.0 - frac)
            }
            LambdaMode::Exponential => {
                let floor = self.min.max(0.01 * self.init);
                let rho = (floor / self.init).powf(1.0 / self.decay_steps as f64);
                self.init * rho.powf(step as f64)
            }
        };
        decayed.max(self.min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn starts_at_one_and_ends_at_min() {
        let s = LambdaSchedule { decay_steps: 1000, ..LambdaSchedule::default() };
        assert_eq!(s.value(0), 1.0);
        assert_eq!(s.value(1000), 0.05);
        assert_eq!(s.value(10_000), 0.05);
        assert!((s.value(500) - 0.5).abs() < 1e-15);
        let e = LambdaSchedule { mode: LambdaMode::Exponential, ..s };
        assert_eq!(e.value(0), 1.0);
        assert!((e.value(1000) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn zero_schedule_is_off() {
        assert_eq!(LambdaSchedule::zero().value(123), 0.0);
        assert!(LambdaSchedule { init: 0.1, min: 0.2, ..LambdaSchedule::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn non_increasing(init in 0.0f64..5.0, frac in 0.0f64..1.0, horizon in 1u64..5000,
                          step in 0u64..10_000, exp in any::<bool>()) {
            let s = LambdaSchedule {
                init,
                min: init * frac,
                decay_steps: horizon,
                mode: if exp { LambdaMode::Exponential } else { LambdaMode::Linear },
            };
            prop_assert!(s.value(step + 1) <= s.value(step));
            prop_assert!(s.value(step) >= s.min && s.value(step) <= s.init);
        }
    }
}
