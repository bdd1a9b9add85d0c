use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::{Error, Result};

/// Gaussian perturbation clipped to `[-clip, clip]`; used for exploration
/// and for target-action smoothing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationNoise {
    pub sigma: f64,
    pub clip: f64,
}

impl Default for ExplorationNoise {
    fn default() -> Self {
        Self { sigma: 0.1, clip: 0.5 }
    }
}

impl ExplorationNoise {
    pub fn new(sigma: f64, clip: f64) -> Result<Self> {
        let n = Self { sigma, clip };
        n.validate()?;
        Ok(n)
    }

    pub fn off() -> Self {
        Self { sigma: 0.0, clip: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.clip >= 0.0) {
            return Err(Error::Config(format!("noise sigma {} / clip {} must be >= 0", self.sigma, self.clip)));
        }
        Ok(())
    }

    /// One clipped draw. A standard normal is consumed even when sigma is
    /// zero so the stream position does not depend on the noise level.
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        (self.sigma * z).clamp(-self.clip, self.clip)
    }
}
