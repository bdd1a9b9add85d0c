//! Delimited-text trajectory files.
//!
//! ```text
//! #trajectories env=pointmass state_dim=6 action_dim=2 n_traj=4
//! s0,s1,s2,s3,s4,s5,a0,a1,r,sn0,sn1,sn2,sn3,sn4,sn5,done,traj
//! 0.12,-0.5,...,0,0
//! ```
//!
//! The first line is the header; a dump of an experience buffer adds
//! `capacity=<n>`. The second line names the columns. Each following record
//! is one transition: state, action, reward, next state, `done` as 0/1 and
//! the zero-based trajectory index. Trajectories appear in order and their
//! transitions contiguously. Reals are written in shortest round-trip form,
//! so a write/read cycle is bit-exact.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Trajectory, Transition};
use crate::envs::EnvId;
use crate::{Error, Result};

const MAGIC: &str = "#trajectories";

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryFile {
    pub env: EnvId,
    pub state_dim: usize,
    pub action_dim: usize,
    pub capacity: Option<usize>,
    pub trajectories: Vec<Trajectory>,
}

impl TrajectoryFile {
    /// Fails unless the file's dimensions match the given ones.
    pub fn expect_dims(&self, state_dim: usize, action_dim: usize) -> Result<()> {
        if self.state_dim != state_dim || self.action_dim != action_dim {
            return Err(Error::Config(format!(
                "trajectory file has dims ({}, {}), environment needs ({state_dim}, {action_dim})",
                self.state_dim, self.action_dim
            )));
        }
        Ok(())
    }
}

fn columns(state_dim: usize, action_dim: usize) -> Vec<String> {
    let mut c: Vec<String> = (0..state_dim).map(|i| format!("s{i}")).collect();
    c.extend((0..action_dim).map(|i| format!("a{i}")));
    c.push("r".into());
    c.extend((0..state_dim).map(|i| format!("sn{i}")));
    c.push("done".into());
    c.push("traj".into());
    c
}

pub fn write_trajectories(path: &Path, env: EnvId, trajectories: &[Trajectory], capacity: Option<usize>) -> Result<()> {
    let first = trajectories.first().ok_or_else(|| Error::Config("no trajectories to write".into()))?;
    let (sd, ad) = (first.state_dim(), first.action_dim());
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "{MAGIC} env={env} state_dim={sd} action_dim={ad} n_traj={}", trajectories.len())?;
    if let Some(c) = capacity {
        write!(out, " capacity={c}")?;
    }
    writeln!(out)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns(sd, ad))?;
    let mut rec: Vec<String> = Vec::with_capacity(2 * sd + ad + 3);
    for (k, traj) in trajectories.iter().enumerate() {
        for t in traj.transitions() {
            t.check_dims(sd, ad)?;
            rec.clear();
            rec.extend(t.s.iter().map(|v| format!("{v:?}")));
            rec.extend(t.a.iter().map(|v| format!("{v:?}")));
            rec.push(format!("{:?}", t.r));
            rec.extend(t.s_next.iter().map(|v| format!("{v:?}")));
            rec.push(if t.done { "1" } else { "0" }.into());
            rec.push(k.to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectories(path: &Path) -> Result<TrajectoryFile> {
    let text = std::fs::read_to_string(path)?;
    parse_trajectories(&text)
}

fn parse_header(line: &str) -> Result<(EnvId, usize, usize, usize, Option<usize>)> {
    let mut toks = line.split_whitespace();
    if toks.next() != Some(MAGIC) {
        return Err(Error::parse(1, format!("missing `{MAGIC}` header")));
    }
    let (mut env, mut sd, mut ad, mut n, mut cap) = (None, None, None, None, None);
    for tok in toks {
        let (k, v) = tok.split_once('=').ok_or_else(|| Error::parse(1, format!("malformed header field `{tok}`")))?;
        let num = || v.parse::<usize>().map_err(|_| Error::parse(1, format!("bad value in `{tok}`")));
        match k {
            "env" => env = Some(v.parse::<EnvId>().map_err(|e| Error::parse(1, e.to_string()))?),
            "state_dim" => sd = Some(num()?),
            "action_dim" => ad = Some(num()?),
            "n_traj" => n = Some(num()?),
            "capacity" => cap = Some(num()?),
            other => return Err(Error::parse(1, format!("unknown header field `{other}`"))),
        }
    }
    match (env, sd, ad, n) {
        (Some(e), Some(s), Some(a), Some(n)) => Ok((e, s, a, n, cap)),
        _ => Err(Error::parse(1, "header needs env, state_dim, action_dim and n_traj")),
    }
}

fn parse_trajectories(text: &str) -> Result<TrajectoryFile> {
    let (head, body) = text.split_once('\n').unwrap_or((text, ""));
    let (env, sd, ad, n_traj, capacity) = parse_header(head.trim_end())?;
    let expect_cols = columns(sd, ad);
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(body.as_bytes());
    let hdr = rdr.headers()?.clone();
    if hdr.iter().ne(expect_cols.iter().map(String::as_str)) {
        return Err(Error::parse(2, format!("column header does not match dims ({sd}, {ad})")));
    }
    let mut groups: Vec<Vec<Transition>> = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 3;
        let rec = rec?;
        if rec.len() != expect_cols.len() {
            return Err(Error::parse(
                line,
                format!("{} fields, expected {} for dims ({sd}, {ad})", rec.len(), expect_cols.len()),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i].trim().parse::<f64>().map_err(|_| Error::parse(line, format!("bad number `{}`", &rec[i])))
        };
        let s = (0..sd).map(num).collect::<Result<Vec<_>>>()?;
        let a = (sd..sd + ad).map(num).collect::<Result<Vec<_>>>()?;
        let r = num(sd + ad)?;
        let s_next = (sd + ad + 1..2 * sd + ad + 1).map(num).collect::<Result<Vec<_>>>()?;
        let done = match rec[2 * sd + ad + 1].trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(line, format!("done flag `{other}`"))),
        };
        let k: usize = rec[2 * sd + ad + 2].trim().parse().map_err(|_| Error::parse(line, "bad trajectory index"))?;
        if k == groups.len() {
            groups.push(Vec::new());
        } else if k + 1 != groups.len() {
            return Err(Error::parse(line, format!("trajectory index {k} out of order")));
        }
        groups[k].push(Transition { s, a, r, s_next, done });
    }
    if groups.len() != n_traj {
        return Err(Error::parse(1, format!("header announces {n_traj} trajectories, found {}", groups.len())));
    }
    let trajectories = groups.into_iter().map(Trajectory::new).collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryFile { env, state_dim: sd, action_dim: ad, capacity, trajectories })
}
