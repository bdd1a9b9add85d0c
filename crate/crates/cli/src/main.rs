//! Command-line front end: demo generation, training, evaluation,
//! comparison, plotting and verification.

mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use asilfd_core::agent::{AgentConfig, AnyAgent, CriticMode};
use asilfd_core::buffers::{read_trajectories, write_trajectories, Trajectory};
use asilfd_core::envs::{collect_demos, ControllerSpec, EnvId, EnvSpec};
use asilfd_core::harness::{
    self, compare, evaluate, gradient_suite, q_error_diagnostic, RunOutput, TrainConfig, Variant,
};
use asilfd_core::rng::{stream, Stream};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "asilfd", version, about = "Self-imitation learning from demonstrations on toy control tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record scripted-controller demonstrations.
    GenDemos(GenDemos),
    /// Train one run from a config file.
    Train(Train),
    /// Evaluate a saved agent with the noise-free policy.
    Eval(Eval),
    /// Train several configs over several seeds and summarise.
    Compare(Compare),
    /// Plot reward curves from metrics files.
    Plot(Plot),
    /// Check analytic gradients against finite differences.
    GradCheck(GradCheck),
    /// Report the ensemble's Q-value error against Monte-Carlo returns.
    Diagnose(Diagnose),
}

#[derive(Clone, Copy, ValueEnum)]
enum Quality {
    Expert,
    Imperfect,
    /// First half expert, second half imperfect.
    Mixed,
}

#[derive(Args)]
struct GenDemos {
    #[arg(long, default_value = "pointmass")]
    env: EnvId,
    #[arg(long, value_enum, default_value = "expert")]
    quality: Quality,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Imperfect controller gain scale.
    #[arg(long, default_value_t = 0.5)]
    gain: f64,
    /// Imperfect controller action noise.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Imperfect controller bias, added to every action coordinate.
    #[arg(long, default_value_t = 0.0)]
    bias: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Train {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    demos: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    /// Output directory; defaults to `runs/<label>/seed-<seed>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Eval {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value = "pointmass")]
    env: EnvId,
    #[arg(long, default_value_t = 10)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct Compare {
    /// Config files; each becomes one row of the summary.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    /// Return that counts as surpassed.
    #[arg(long, conflicts_with = "threshold_demos")]
    threshold: Option<f64>,
    /// Use the mean return of a demonstration file as the threshold.
    #[arg(long)]
    threshold_demos: Option<PathBuf>,
    /// Run the (config, seed) pairs on the thread pool.
    #[arg(long)]
    parallel: bool,
    /// Root directory for per-run artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Plot {
    /// Metrics files; runs with the same variant column form one curve.
    #[arg(required = true)]
    metrics: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "eval return")]
    title: String,
}

#[derive(Args)]
struct GradCheck {
    #[arg(long, default_value_t = 50)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fixture {
    /// Chain agent whose critics equal the one-step reward, with gamma = 0.
    ChainReward,
}

#[derive(Args)]
struct Diagnose {
    #[arg(long, conflicts_with_all = ["fresh", "fixture"])]
    checkpoint: Option<PathBuf>,
    /// Use a freshly initialised agent.
    #[arg(long)]
    fresh: bool,
    #[arg(long, value_enum)]
    fixture: Option<Fixture>,
    #[arg(long, default_value = "pointmass")]
    env: EnvId,
    #[arg(long, default_value_t = 100)]
    states: usize,
    #[arg(long, default_value_t = 500)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fail when the mean error exceeds this value.
    #[arg(long)]
    tolerance: Option<f64>,
}

/// Failure classes mapped to the documented exit codes.
enum Failure {
    Usage(anyhow::Error),
    Numeric(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let numeric = e.chain().any(|c| c.downcast_ref::<asilfd_core::Error>().is_some_and(|e| e.is_numeric()));
        if numeric {
            Failure::Numeric(e)
        } else {
            Failure::Usage(e)
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.into())
    }
}

impl From<asilfd_core::Error> for Failure {
    fn from(e: asilfd_core::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenDemos(a) => gen_demos(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Compare(a) => run_compare(a),
        Command::Plot(a) => plot::run(&a.metrics, &a.out, &a.title).map_err(Failure::from),
        Command::GradCheck(a) => grad_check(a),
        Command::Diagnose(a) => diagnose(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("numeric failure: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn gen_demos(a: GenDemos) -> CmdResult {
    if a.n == 0 {
        return Err(Failure::Usage(anyhow::anyhow!("--n must be at least 1")));
    }
    let spec = EnvSpec::new(a.env);
    let imperfect = ControllerSpec::imperfect(a.gain, vec![a.bias; spec.action_dim], a.noise)?;
    let expert = ControllerSpec::expert(spec.action_dim);
    let demos: Vec<Trajectory> = match a.quality {
        Quality::Expert => collect_demos(&spec, &expert, a.n, a.seed)?,
        Quality::Imperfect => collect_demos(&spec, &imperfect, a.n, a.seed)?,
        Quality::Mixed => {
            let n_expert = a.n.div_ceil(2);
            let mut d = collect_demos(&spec, &expert, n_expert, a.seed)?;
            if a.n > n_expert {
                d.extend(collect_demos(&spec, &imperfect, a.n - n_expert, a.seed.wrapping_add(1))?);
            }
            d
        }
    };
    write_trajectories(&a.out, a.env, &demos, None).with_context(|| format!("writing {}", a.out.display()))?;
    for (i, d) in demos.iter().enumerate() {
        println!("trajectory {i}: steps {} return {:.6}", d.len(), d.r_sum());
    }
    let mean = demos.iter().map(|d| d.r_sum()).sum::<f64>() / demos.len() as f64;
    println!("mean return {mean:.6} -> {}", a.out.display());
    Ok(())
}

fn apply_overrides(a: &Train) -> anyhow::Result<TrainConfig> {
    let mut c = TrainConfig::load_unvalidated(&a.config)?;
    if let Some(v) = a.variant {
        c.variant = v;
    }
    if let Some(s) = a.seed {
        c.seed = s;
    }
    if let Some(n) = a.steps {
        c.total_steps = n;
    }
    if let Some(d) = &a.demos {
        c.demo_path = Some(d.clone());
    }
    if a.label.is_some() {
        c.label = a.label.clone();
    }
    c.validate()?;
    Ok(c)
}

fn train(a: Train) -> CmdResult {
    let config = apply_overrides(&a)?;
    let out =
        a.out.clone().unwrap_or_else(|| Path::new("runs").join(config.label()).join(format!("seed-{}", config.seed)));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    std::fs::write(out.join("config.toml"), config.to_toml())?;
    let summary = harness::train(&config, &RunOutput::dir(&out))?;
    if let Some(bc) = summary.bc {
        println!("bc pretrain: mse {:.6} -> {:.6} over {} epochs", bc.initial_mse, bc.final_mse, bc.epochs);
    }
    let last = summary.records.last().expect("initial evaluation is always recorded");
    println!(
        "{} seed {}: {} steps, {} updates, {} episodes, final eval return {:.4}",
        last.variant, last.seed, last.step, last.updates, last.episodes, last.eval_return
    );
    println!("artifacts in {}", out.display());
    Ok(())
}

fn eval(a: Eval) -> CmdResult {
    let agent = AnyAgent::load(&a.checkpoint)?;
    let spec = EnvSpec::new(a.env);
    check_dims(agent.config(), &spec)?;
    let r = match &agent {
        AnyAgent::F32(x) => evaluate(&x.actor, &spec, a.episodes, a.seed)?,
        AnyAgent::F64(x) => evaluate(&x.actor, &spec, a.episodes, a.seed)?,
    };
    println!("mean return over {} episodes: {r:.6}", a.episodes);
    Ok(())
}

fn check_dims(c: &AgentConfig, spec: &EnvSpec) -> anyhow::Result<()> {
    if c.state_dim != spec.state_dim || c.action_dim != spec.action_dim {
        bail!(
            "agent dims {}/{} do not match {} ({}/{})",
            c.state_dim,
            c.action_dim,
            spec.id,
            spec.state_dim,
            spec.action_dim
        );
    }
    Ok(())
}

fn run_compare(a: Compare) -> CmdResult {
    let configs = a
        .configs
        .iter()
        .map(|p| TrainConfig::load(p).map_err(anyhow::Error::from))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let threshold = match (a.threshold, &a.threshold_demos) {
        (Some(t), _) => t,
        (None, Some(p)) => {
            let f = read_trajectories(p).with_context(|| format!("reading {}", p.display()))?;
            f.trajectories.iter().map(|t| t.r_sum()).sum::<f64>() / f.trajectories.len() as f64
        }
        (None, None) => return Err(Failure::Usage(anyhow::anyhow!("pass --threshold or --threshold-demos"))),
    };
    let report = compare(&configs, &a.seeds, threshold, a.parallel, a.out.clone())?;
    print!("{}", report.to_table());
    if let Some(out) = &a.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("summary.txt"), report.to_table())?;
    }
    Ok(())
}

fn grad_check(a: GradCheck) -> CmdResult {
    let report = gradient_suite(a.instances, a.seed)?;
    for f in &report.families {
        println!("{:<14} instances {:>4}  worst relative error {:.3e}", f.name, f.instances, f.max_rel_error);
    }
    let worst = report.max_rel_error();
    println!("worst relative error {worst:.3e} (tolerance {:.1e})", a.tolerance);
    if !(worst <= a.tolerance) {
        return Err(Failure::Numeric(anyhow::anyhow!("gradient check exceeded tolerance: {worst:.3e}")));
    }
    Ok(())
}

fn diagnose(a: Diagnose) -> CmdResult {
    let mut rng = stream(a.seed, Stream::Eval);
    let (agent, spec, default_tol) = match (&a.checkpoint, a.fresh, a.fixture) {
        (Some(p), _, _) => (AnyAgent::load(p)?, EnvSpec::new(a.env), None),
        (None, true, None) => {
            let spec = EnvSpec::new(a.env);
            let cfg = AgentConfig {
                critic_mode: CriticMode::Sequential,
                ..AgentConfig::for_dims(spec.state_dim, spec.action_dim, spec.action_bound)
            };
            (AnyAgent::F64(asilfd_core::agent::Agent::new(cfg, a.seed)?), spec, None)
        }
        (None, false, Some(Fixture::ChainReward)) => {
            (AnyAgent::F64(harness::fixtures::chain_reward_agent(0.0)?), EnvSpec::new(EnvId::Chain), Some(1e-6))
        }
        _ => return Err(Failure::Usage(anyhow::anyhow!("pass exactly one of --checkpoint, --fresh, --fixture"))),
    };
    check_dims(agent.config(), &spec)?;
    let r = match &agent {
        AnyAgent::F32(x) => q_error_diagnostic(x, &spec, a.states, a.horizon, &mut rng)?,
        AnyAgent::F64(x) => q_error_diagnostic(x, &spec, a.states, a.horizon, &mut rng)?,
    };
    let mean_q = r.states.iter().map(|s| s.q).sum::<f64>() / r.states.len() as f64;
    let mean_g = r.states.iter().map(|s| s.mc_return).sum::<f64>() / r.states.len() as f64;
    println!("env {} states {} horizon {}", spec.id, r.states.len(), r.horizon);
    println!("mean Q {mean_q:.6}  mean MC return {mean_g:.6}");
    println!("mean absolute Q error {:.6e}", r.mean_abs_error);
    println!("truncation tail bound {:.6e}", r.tail_bound);
    if let Some(tol) = a.tolerance.or(default_tol) {
        if !(r.mean_abs_error <= tol) {
            return Err(Failure::Numeric(anyhow::anyhow!(
                "Q error {:.6e} exceeds tolerance {tol:.1e}",
                r.mean_abs_error
            )));
        }
        println!("within tolerance {tol:.1e}");
    }
    Ok(())
}
