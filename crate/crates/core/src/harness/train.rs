use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{ExperienceUse, Precision, TrainConfig};
use super::eval::{bc_pretrain, evaluate, BcReport};
use super::metrics::{variant_column, MetricsRecord};
use crate::agent::Agent;
use crate::buffers::{
    mixed_sample, read_trajectories, ExperienceBuffer, SampleBuffer, Trajectory, TrajectoryAccumulator, Transition,
};
use crate::envs::{episode_seed, UniformPolicy};
use crate::numerics::Real;
use crate::rng::{mix, stream, Stream};
use crate::{Error, Result};

/// Outcome of a completed run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub records: Vec<MetricsRecord>,
    pub bc: Option<BcReport>,
    /// Serialized final agent (see [`Agent::to_text`]).
    pub checkpoint: String,
    /// Returns of every completed training episode, in order.
    pub episode_returns: Vec<f64>,
}

impl RunSummary {
    pub fn final_return(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.eval_return)
    }
}

/// Where a run writes its artifacts; every file is optional.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub dir: Option<PathBuf>,
}

impl RunOutput {
    pub fn none() -> Self {
        Self { dir: None }
    }

    pub fn dir(path: impl Into<PathBuf>) -> Self {
        Self { dir: Some(path.into()) }
    }
}

/// Loads the demonstrations a variant needs; variants that do not use
/// demonstrations never touch the file.
pub fn load_demos(config: &TrainConfig) -> Result<Option<Vec<Trajectory>>> {
    if !config.variant.uses_demos() {
        return Ok(None);
    }
    let path = config
        .demo_path
        .as_ref()
        .ok_or_else(|| Error::Config(format!("variant {} needs demo_path", config.variant)))?;
    let file = read_trajectories(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot read demos {}: {io}", path.display())),
        other => other,
    })?;
    let spec = config.env_spec();
    if file.env != spec.id {
        return Err(Error::Config(format!("demos were recorded on {}, config trains on {}", file.env, spec.id)));
    }
    file.expect_dims(spec.state_dim, spec.action_dim)?;
    Ok(Some(file.trajectories))
}

/// Runs the configured variant. Artifacts written to `out.dir`:
/// `metrics.csv` (one row per evaluation, deterministic), `timing.csv`
/// (wall-clock per evaluation), `agent.ckpt` and, for variants with an
/// experience buffer, `experience.csv`.
pub fn train(config: &TrainConfig, out: &RunOutput) -> Result<RunSummary> {
    config.validate()?;
    let demos = load_demos(config)?;
    train_with_demos(config, demos, out)
}

/// Like [`train`] with demonstrations supplied in memory.
pub fn train_with_demos(config: &TrainConfig, demos: Option<Vec<Trajectory>>, out: &RunOutput) -> Result<RunSummary> {
    config.agent_config().validate()?;
    if let Some(dir) = &out.dir {
        std::fs::create_dir_all(dir)?;
    }
    match config.precision {
        Precision::F32 => Run::<f32>::new(config, demos, out)?.run(),
        Precision::F64 => Run::<f64>::new(config, demos, out)?.run(),
    }
}

#[derive(Default)]
struct Accum {
    critic: f64,
    actor: f64,
    target: f64,
    n: u64,
}

impl Accum {
    fn mean(&self, v: f64) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            v / self.n as f64
        }
    }
}

struct Run<'a, T> {
    config: &'a TrainConfig,
    agent: Agent<T>,
    be: Option<ExperienceBuffer>,
    bm: SampleBuffer,
    bc: Option<BcReport>,
    metrics: Option<BufWriter<File>>,
    timing: Option<BufWriter<File>>,
    dir: Option<PathBuf>,
    records: Vec<MetricsRecord>,
    started: Instant,
}

fn open(dir: &Path, name: &str, header: &str) -> Result<BufWriter<File>> {
    let mut w = BufWriter::new(File::create(dir.join(name))?);
    writeln!(w, "{header}")?;
    Ok(w)
}

impl<'a, T: Real> Run<'a, T> {
    fn new(config: &'a TrainConfig, demos: Option<Vec<Trajectory>>, out: &RunOutput) -> Result<Self> {
        let spec = config.env_spec();
        let variant = config.variant;
        let demos = match (variant.uses_demos(), demos) {
            (true, Some(d)) if !d.is_empty() => {
                for t in &d {
                    t.validate()?;
                    if t.state_dim() != spec.state_dim || t.action_dim() != spec.action_dim {
                        return Err(Error::Config(format!(
                            "demonstration dims {}/{} do not match {} ({}/{})",
                            t.state_dim(),
                            t.action_dim(),
                            spec.id,
                            spec.state_dim,
                            spec.action_dim
                        )));
                    }
                }
                d
            }
            (true, _) => return Err(Error::Config(format!("variant {variant} needs demonstrations"))),
            (false, _) => Vec::new(),
        };

        let mut agent = Agent::<T>::new(config.agent_config(), config.seed)?;
        let bc = if variant.bc_pretrain() {
            let (actor, _) = agent.actor_parts_mut();
            Some(bc_pretrain(actor, &demos, config.bc_epochs, config.bc_lr)?)
        } else {
            None
        };

        let mut bm = SampleBuffer::new(config.sample_capacity, spec.state_dim, spec.action_dim);
        if variant.demos_in_sample_buffer() {
            for t in demos.iter().flat_map(|d| d.transitions()) {
                bm.push(t.clone())?;
            }
        }
        let be = match variant.experience() {
            ExperienceUse::None => None,
            _ => Some(ExperienceBuffer::seed(demos, config.experience_capacity)?),
        };

        let (metrics, timing) = match &out.dir {
            Some(dir) => (
                Some(open(dir, "metrics.csv", &MetricsRecord::header_line())?),
                Some(open(dir, "timing.csv", "step,wall_seconds")?),
            ),
            None => (None, None),
        };
        Ok(Self {
            config,
            agent,
            be,
            bm,
            bc,
            metrics,
            timing,
            dir: out.dir.clone(),
            records: Vec::new(),
            started: Instant::now(),
        })
    }

    fn run(mut self) -> Result<RunSummary> {
        let c = self.config;
        let spec = c.env_spec();
        let alpha = c.effective_alpha();
        let noise = c.noise();
        let adaptive = c.variant.experience() == ExperienceUse::Adaptive;
        let env_base = mix(c.seed, Stream::Env as u64);
        let mut explore = stream(c.seed, Stream::Explore);
        let mut sampler = stream(c.seed, Stream::Sampler);

        let mut acc = Accum::default();
        let (mut updates, mut episodes, mut admitted) = (0u64, 0u64, 0u64);
        let mut episode_returns = Vec::new();
        self.record(0, &acc, updates, episodes, admitted)?;

        let mut traj = TrajectoryAccumulator::new();
        let mut st = spec.reset(episode_seed(env_base, 0));
        for t in 0..c.total_steps {
            let a = if t < c.warmup_steps {
                UniformPolicy::sample(&spec, &mut explore)
            } else {
                self.agent.actor.select_action(&st.state, &noise, &mut explore)?
            };
            let out = spec.step(&st, &a)?;
            let tr = Transition { s: st.state, a, r: out.reward, s_next: out.next.state.clone(), done: out.done };
            self.bm.push(tr.clone())?;
            traj.push(tr);

            if self.bm.len() > c.batch_size {
                let batch = mixed_sample(self.be.as_ref(), &self.bm, c.batch_size, alpha, &mut sampler)?;
                let m = self.agent.update_step(&batch, t).map_err(|e| at_step(e, t + 1))?;
                acc.critic += m.mean_critic_loss();
                acc.actor += m.actor_loss;
                acc.target += m.mean_target;
                acc.n += 1;
                updates += 1;
            }

            if out.done {
                let finished = traj.finish()?;
                episode_returns.push(finished.r_sum());
                if adaptive {
                    if let Some(be) = self.be.as_mut() {
                        admitted += u64::from(be.maybe_admit(finished)?);
                    }
                }
                episodes += 1;
                st = spec.reset(episode_seed(env_base, episodes));
            } else {
                st = out.next;
            }

            let step = t + 1;
            if step % c.eval_interval == 0 || step == c.total_steps {
                self.record(step, &acc, updates, episodes, admitted)?;
                acc = Accum::default();
            }
        }

        let checkpoint = self.agent.to_text()?;
        if let Some(dir) = &self.dir {
            std::fs::write(dir.join("agent.ckpt"), &checkpoint)?;
            if let Some(be) = &self.be {
                be.dump(&dir.join("experience.csv"), spec.id)?;
            }
        }
        for w in [self.metrics.as_mut(), self.timing.as_mut()].into_iter().flatten() {
            w.flush()?;
        }
        Ok(RunSummary { records: self.records, bc: self.bc, checkpoint, episode_returns })
    }

    fn record(&mut self, step: u64, acc: &Accum, updates: u64, episodes: u64, admitted: u64) -> Result<()> {
        let c = self.config;
        let spec = c.env_spec();
        let eval_return = evaluate(&self.agent.actor, &spec, c.eval_episodes, mix(c.seed, Stream::Eval as u64))?;
        let rec = MetricsRecord {
            variant: variant_column(c.label.as_deref(), c.variant),
            seed: c.seed,
            step,
            eval_return,
            critic_loss: acc.mean(acc.critic),
            actor_loss: acc.mean(acc.actor),
            lambda: self.agent.config.lambda.value(step.saturating_sub(1)),
            mean_target: acc.mean(acc.target),
            r_min: self.be.as_ref().map_or(f64::NAN, ExperienceBuffer::r_min),
            be_trajectories: self.be.as_ref().map_or(0, ExperienceBuffer::n_trajectories),
            updates,
            episodes,
            admitted,
        };
        if let Some(w) = self.metrics.as_mut() {
            writeln!(w, "{}", rec.to_line())?;
            w.flush()?;
        }
        if let Some(w) = self.timing.as_mut() {
            writeln!(w, "{},{:.3}", step, self.started.elapsed().as_secs_f64())?;
        }
        self.records.push(rec);
        Ok(())
    }
}

fn at_step(e: Error, step: u64) -> Error {
    match e {
        Error::Numeric(m) => Error::Numeric(format!("env step {step}: {m}")),
        Error::NonFinite { layer, what } => {
            Error::Numeric(format!("env step {step}: non-finite {what} in layer {layer}"))
        }
        other => other,
    }
}
