use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::{AgentConfig, CriticMode, ExplorationNoise, LambdaMode, LambdaSchedule, TargetAction};
use crate::envs::{EnvId, EnvSpec};
use crate::{Error, Result};

/// Training recipe. `Asilfd` is the full method; the others are the
/// baselines and ablations it is compared against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Asilfd,
    Td3,
    Redq,
    RedqBc,
    RedqLfd,
    AsilfdNoConstraint,
}

/// How a variant uses the trajectory-level experience buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperienceUse {
    None,
    /// Seeded with demonstrations, never admits agent trajectories.
    ReadOnly,
    /// Seeded with demonstrations, admits better agent trajectories.
    Adaptive,
}

impl Variant {
    pub const ALL: [Variant; 6] =
        [Variant::Asilfd, Variant::Td3, Variant::Redq, Variant::RedqBc, Variant::RedqLfd, Variant::AsilfdNoConstraint];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Asilfd => "asilfd",
            Variant::Td3 => "td3",
            Variant::Redq => "redq",
            Variant::RedqBc => "redq_bc",
            Variant::RedqLfd => "redq_lfd",
            Variant::AsilfdNoConstraint => "asilfd_noconstraint",
        }
    }

    pub fn uses_demos(self) -> bool {
        !matches!(self, Variant::Td3 | Variant::Redq)
    }

    pub fn experience(self) -> ExperienceUse {
        match self {
            Variant::Asilfd | Variant::AsilfdNoConstraint => ExperienceUse::Adaptive,
            Variant::RedqLfd => ExperienceUse::ReadOnly,
            _ => ExperienceUse::None,
        }
    }

    pub fn bc_pretrain(self) -> bool {
        matches!(self, Variant::RedqBc | Variant::RedqLfd)
    }

    pub fn demos_in_sample_buffer(self) -> bool {
        self == Variant::RedqLfd
    }

    pub fn penalised(self) -> bool {
        self == Variant::Asilfd
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        Variant::ALL.into_iter().find(|v| v.name().replace('_', "") == key).ok_or_else(|| {
            let names: Vec<_> = Variant::ALL.iter().map(|v| v.name()).collect();
            Error::Config(format!("unknown variant `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

/// Everything a training run needs. Stored as a flat TOML table; unknown
/// keys are rejected and omitted keys take the defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub env: EnvId,
    /// Overrides the environment's episode length.
    pub max_episode_steps: Option<usize>,
    pub variant: Variant,
    /// Free-form tag used to group runs in comparisons; defaults to the variant name.
    pub label: Option<String>,
    pub seed: u64,
    pub total_steps: u64,
    pub batch_size: usize,
    pub alpha: f64,
    pub n_critics: usize,
    pub subset_size: usize,
    pub gamma: f64,
    pub tau: f64,
    pub sigma: f64,
    pub noise_clip: f64,
    pub lambda_init: f64,
    pub lambda_min: f64,
    /// Decay horizon of the penalty weight; defaults to half of `total_steps`.
    pub lambda_decay_steps: Option<u64>,
    pub lambda_mode: LambdaMode,
    pub warmup_steps: u64,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub demo_path: Option<PathBuf>,
    pub sample_capacity: usize,
    pub experience_capacity: usize,
    pub bc_epochs: usize,
    pub bc_lr: f64,
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub precision: Precision,
    pub critic_mode: CriticMode,
    pub target_action: TargetAction,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            env: EnvId::PointMass,
            max_episode_steps: None,
            variant: Variant::Asilfd,
            label: None,
            seed: 0,
            total_steps: 50_000,
            batch_size: 256,
            alpha: 0.25,
            n_critics: 10,
            subset_size: 2,
            gamma: 0.99,
            tau: 0.005,
            sigma: 0.1,
            noise_clip: 0.5,
            lambda_init: 1.0,
            lambda_min: 0.05,
            lambda_decay_steps: None,
            lambda_mode: LambdaMode::Linear,
            warmup_steps: 1000,
            eval_interval: 1000,
            eval_episodes: 10,
            demo_path: None,
            sample_capacity: 1_000_000,
            experience_capacity: 16,
            bc_epochs: 500,
            bc_lr: 1e-3,
            hidden: vec![64, 64],
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            precision: Precision::F64,
            critic_mode: CriticMode::Sequential,
            target_action: TargetAction::Target,
        }
    }
}

fn in_file(e: Error, path: &Path) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c = Self::parse(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Parses without [`TrainConfig::validate`], for callers that still
    /// apply overrides.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c = Self::load_unvalidated(path)?;
        c.validate().map_err(|e| in_file(e, path))?;
        Ok(c)
    }

    pub fn load_unvalidated(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| in_file(e, path))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serialises")
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.variant.name().to_string())
    }

    pub fn env_spec(&self) -> EnvSpec {
        let spec = EnvSpec::new(self.env);
        match self.max_episode_steps {
            Some(n) => spec.with_max_steps(n),
            None => spec,
        }
    }

    /// Fraction of each batch drawn from the experience buffer. Variants
    /// without one always sample the whole batch from the sample buffer.
    pub fn effective_alpha(&self) -> f64 {
        match self.variant.experience() {
            ExperienceUse::None => 0.0,
            _ => self.alpha,
        }
    }

    pub fn lambda_schedule(&self) -> LambdaSchedule {
        if !self.variant.penalised() {
            return LambdaSchedule::zero();
        }
        LambdaSchedule {
            init: self.lambda_init,
            min: self.lambda_min,
            decay_steps: self.lambda_decay_steps.unwrap_or(self.total_steps / 2),
            mode: self.lambda_mode,
        }
    }

    /// Agent hyper-parameters after applying the variant's overrides.
    pub fn agent_config(&self) -> AgentConfig {
        let spec = self.env_spec();
        let (n, m) = match self.variant {
            Variant::Td3 => (2, 2),
            _ => (self.n_critics, self.subset_size),
        };
        AgentConfig {
            state_dim: spec.state_dim,
            action_dim: spec.action_dim,
            action_bound: spec.action_bound,
            hidden: self.hidden.clone(),
            n_critics: n,
            subset_size: m,
            gamma: self.gamma,
            tau: self.tau,
            actor_lr: self.actor_lr,
            critic_lr: self.critic_lr,
            target_noise: self.noise(),
            lambda: self.lambda_schedule(),
            critic_mode: self.critic_mode,
            target_action: self.target_action,
        }
    }

    pub fn noise(&self) -> ExplorationNoise {
        ExplorationNoise { sigma: self.sigma, clip: self.noise_clip }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if self.eval_interval == 0 || self.eval_episodes == 0 {
            return bad("eval_interval and eval_episodes must be positive".into());
        }
        if self.sample_capacity < self.batch_size {
            return bad(format!(
                "sample_capacity {} is smaller than batch_size {}",
                self.sample_capacity, self.batch_size
            ));
        }
        if self.experience_capacity == 0 {
            return bad("experience_capacity must be positive".into());
        }
        if self.max_episode_steps == Some(0) {
            return bad("max_episode_steps must be positive".into());
        }
        if !(self.bc_lr > 0.0 && self.bc_lr.is_finite()) {
            return bad(format!("bc_lr must be positive, got {}", self.bc_lr));
        }
        if self.variant.uses_demos() && self.demo_path.is_none() {
            return bad(format!("variant {} needs demo_path", self.variant));
        }
        ExplorationNoise::new(self.sigma, self.noise_clip)?;
        self.agent_config().validate()
    }
}
