//! Plain-text agent checkpoints. Every float is written with the shortest
//! representation that parses back bit-exactly, so a restored agent
//! continues exactly where the saved one stopped.

use std::fmt::Write as _;
use std::path::Path;

use super::{Actor, Agent, AgentConfig, CriticEnsemble};
use crate::numerics::{Adam, Mlp, Real};
use crate::rng::RngState;
use crate::textio::LineReader;
use crate::{Error, Result};

const MAGIC: &str = "agent-checkpoint";

impl<T: Real> Agent<T> {
    pub fn to_text(&self) -> Result<String> {
        let config = toml::to_string(&self.config).map_err(|e| Error::Config(e.to_string()))?;
        let mut s = String::new();
        writeln!(s, "{MAGIC} {}", T::TAG).unwrap();
        writeln!(s, "updates {}", self.updates).unwrap();
        writeln!(s, "rng {}", RngState::capture(&self.rng).to_text()).unwrap();
        writeln!(s, "config {}", config.lines().count()).unwrap();
        for l in config.lines() {
            writeln!(s, "{l}").unwrap();
        }
        writeln!(s, "actor {}", self.actor.bound()).unwrap();
        s.push_str(&self.actor.online.to_text());
        s.push_str(&self.actor.target.to_text());
        s.push_str(&self.actor_opt.to_text());
        writeln!(s, "critics {} {}", self.critics.n(), self.critics.m()).unwrap();
        for i in 0..self.critics.n() {
            writeln!(s, "critic {i}").unwrap();
            s.push_str(&self.critics.online[i].to_text());
            s.push_str(&self.critics.target[i].to_text());
            s.push_str(&self.critic_opts[i].to_text());
        }
        writeln!(s, "end {MAGIC}").unwrap();
        Ok(s)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = LineReader::new(text);
        let h = r.expect(MAGIC)?;
        if h != [T::TAG] {
            return Err(Error::parse(r.line(), format!("checkpoint precision {:?}, expected {}", h, T::TAG)));
        }
        let updates: u64 = one(&mut r, "updates")?;
        let rng_line = r.expect("rng")?.join(" ");
        let rng =
            RngState::from_text(&rng_line).ok_or_else(|| Error::parse(r.line(), "malformed rng state"))?.restore();
        let n_lines: usize = one(&mut r, "config")?;
        let config_text = r.raw_lines(n_lines)?.join("\n");
        let config: AgentConfig =
            toml::from_str(&config_text).map_err(|e| Error::parse(r.line(), format!("config block: {e}")))?;

        let bound: f64 = one(&mut r, "actor")?;
        let online = Mlp::read(&mut r)?;
        let target = Mlp::read(&mut r)?;
        let actor_opt = Adam::read(&mut r)?;
        let actor = Actor::from_nets(online, target, bound)?;

        let toks = r.expect("critics")?;
        if toks.len() != 2 {
            return Err(Error::parse(r.line(), "expected `critics <n> <m>`"));
        }
        let (n, m): (usize, usize) = (r.parse(toks[0])?, r.parse(toks[1])?);
        let (mut on, mut tg, mut opts) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..n {
            let k: usize = one(&mut r, "critic")?;
            if k != i {
                return Err(Error::parse(r.line(), format!("critic {k} out of order, expected {i}")));
            }
            on.push(Mlp::read(&mut r)?);
            tg.push(Mlp::read(&mut r)?);
            opts.push(Adam::read(&mut r)?);
        }
        r.expect("end")?;
        let critics = CriticEnsemble::from_nets(on, tg, m)?;

        let mut agent = Agent::from_parts(config, actor, critics, rng)?;
        check_opt(&agent.actor_opt, &actor_opt)?;
        for (a, b) in agent.critic_opts.iter().zip(&opts) {
            check_opt(a, b)?;
        }
        agent.actor_opt = actor_opt;
        agent.critic_opts = opts;
        agent.updates = updates;
        Ok(agent)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// A checkpoint of either precision.
#[derive(Clone, Debug)]
pub enum AnyAgent {
    F32(Agent<f32>),
    F64(Agent<f64>),
}

impl AnyAgent {
    pub fn from_text(text: &str) -> Result<Self> {
        let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
        match first.split_whitespace().collect::<Vec<_>>().as_slice() {
            [MAGIC, "f32"] => Ok(AnyAgent::F32(Agent::from_text(text)?)),
            [MAGIC, "f64"] => Ok(AnyAgent::F64(Agent::from_text(text)?)),
            _ => Err(Error::parse(1, "not an agent checkpoint")),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read checkpoint {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn config(&self) -> &AgentConfig {
        match self {
            AnyAgent::F32(a) => &a.config,
            AnyAgent::F64(a) => &a.config,
        }
    }
}

fn one<V: std::str::FromStr>(r: &mut LineReader<'_>, key: &str) -> Result<V> {
    let toks = r.expect(key)?;
    if toks.len() != 1 {
        return Err(Error::parse(r.line(), format!("expected `{key} <value>`")));
    }
    r.parse(toks[0])
}

fn check_opt<T: Real>(fresh: &Adam<T>, loaded: &Adam<T>) -> Result<()> {
    if fresh.n_params() != loaded.n_params() {
        return Err(Error::Shape(format!(
            "optimizer state for {} parameters, network has {}",
            loaded.n_params(),
            fresh.n_params()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::tests::{random_batch, small_config};
    use super::*;

    #[test]
    fn restore_resumes_bit_identically() {
        let mut a = Agent::<f64>::new(small_config(), 4).unwrap();
        let batch = random_batch(24, 7);
        for s in 0..2 {
            a.update_step(&batch, s).unwrap();
        }
        let text = a.to_text().unwrap();
        let mut b = Agent::<f64>::from_text(&text).unwrap();
        assert_eq!(b.to_text().unwrap(), text);
        for s in 2..4 {
            assert_eq!(a.update_step(&batch, s).unwrap(), b.update_step(&batch, s).unwrap());
        }
        assert_eq!(a.to_text().unwrap(), b.to_text().unwrap());
    }

    #[test]
    fn f32_round_trip_and_precision_guard() {
        let a = Agent::<f32>::new(small_config(), 1).unwrap();
        let text = a.to_text().unwrap();
        assert_eq!(Agent::<f32>::from_text(&text).unwrap().to_text().unwrap(), text);
        assert!(Agent::<f64>::from_text(&text).is_err());
    }

    #[test]
    fn truncated_checkpoint_is_a_parse_error() {
        let text = Agent::<f64>::new(small_config(), 1).unwrap().to_text().unwrap();
        let cut = &text[..text.len() / 2];
        assert!(matches!(Agent::<f64>::from_text(cut), Err(Error::Parse { .. })));
    }
}
