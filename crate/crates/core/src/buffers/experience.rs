use std::path::Path;

use super::{read_trajectories, write_trajectories, Trajectory, TrajectoryFile, Transition};
use crate::envs::EnvId;
use crate::{Error, Result};

/// Trajectory-ranked experience buffer.
///
/// Holds demonstrations plus every agent episode whose return beat the
/// buffer's minimum at the time it finished. When full, the
/// minimum-return trajectory (oldest on ties) is evicted, so the minimum
/// never decreases.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperienceBuffer {
    trajectories: Vec<Trajectory>,
    r_sums: Vec<f64>,
    /// Prefix sums of trajectory lengths for flat transition indexing.
    ends: Vec<usize>,
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
}

impl ExperienceBuffer {
    pub fn seed(demos: Vec<Trajectory>, capacity: usize) -> Result<Self> {
        let first =
            demos.first().ok_or_else(|| Error::Config("experience buffer needs at least one demonstration".into()))?;
        if capacity < demos.len() {
            return Err(Error::Config(format!("capacity {capacity} below the {} seed demonstrations", demos.len())));
        }
        let (state_dim, action_dim) = (first.state_dim(), first.action_dim());
        for d in &demos {
            d.validate()?;
            d.transitions()[0].check_dims(state_dim, action_dim)?;
        }
        let mut buf = Self {
            r_sums: demos.iter().map(Trajectory::r_sum).collect(),
            trajectories: demos,
            ends: Vec::new(),
            capacity,
            state_dim,
            action_dim,
        };
        buf.reindex();
        Ok(buf)
    }

    fn reindex(&mut self) {
        self.ends.clear();
        let mut total = 0;
        for t in &self.trajectories {
            total += t.len();
            self.ends.push(total);
        }
    }

    /// Minimum cumulative return over resident trajectories.
    pub fn r_min(&self) -> f64 {
        self.r_sums.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn r_sum_list(&self) -> &[f64] {
        &self.r_sums
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn n_trajectories(&self) -> usize {
        self.trajectories.len()
    }

    pub fn n_transitions(&self) -> usize {
        self.ends.last().copied().unwrap_or(0)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// Transition at a flat index across all trajectories.
    pub fn transition(&self, index: usize) -> &Transition {
        let k = self.ends.partition_point(|&e| e <= index);
        let start = if k == 0 { 0 } else { self.ends[k - 1] };
        &self.trajectories[k].transitions()[index - start]
    }

    /// Admits `traj` iff its return is strictly above the current minimum.
    pub fn maybe_admit(&mut self, traj: Trajectory) -> Result<bool> {
        traj.validate()?;
        traj.transitions()[0]
            .check_dims(self.state_dim, self.action_dim)
            .map_err(|e| Error::Validation(e.to_string()))?;
        if !(traj.r_sum() > self.r_min()) {
            return Ok(false);
        }
        self.r_sums.push(traj.r_sum());
        self.trajectories.push(traj);
        while self.trajectories.len() > self.capacity {
            let worst =
                self.r_sums.iter().enumerate().fold(0, |best, (i, &r)| if r < self.r_sums[best] { i } else { best });
            self.r_sums.remove(worst);
            self.trajectories.remove(worst);
        }
        self.reindex();
        Ok(true)
    }

    /// Writes the resident trajectories in admission order.
    pub fn dump(&self, path: &Path, env: EnvId) -> Result<()> {
        write_trajectories(path, env, &self.trajectories, Some(self.capacity))
    }

    pub fn restore(path: &Path) -> Result<(EnvId, Self)> {
        let TrajectoryFile { env, trajectories, capacity, .. } = read_trajectories(path)?;
        let capacity = capacity.unwrap_or(trajectories.len());
        Ok((env, Self::seed(trajectories, capacity)?))
    }
}
