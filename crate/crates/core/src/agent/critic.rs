use rand::seq::index;

use super::actor::Actor;
use super::noise::ExplorationNoise;
use crate::buffers::Batch;
use crate::numerics::{Activation, Mlp, Real};
use crate::par;
use crate::rng::Rng;
use crate::{Error, Result};

/// A mini-batch converted to the agent's precision.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorBatch<T> {
    pub rows: usize,
    pub state_dim: usize,
    pub action_dim: usize,
    pub states: Vec<T>,
    pub actions: Vec<T>,
    pub rewards: Vec<T>,
    pub next_states: Vec<T>,
}

impl<T: Real> TensorBatch<T> {
    pub fn from_batch(b: &Batch) -> Self {
        let cv = |v: &[f64]| v.iter().map(|&x| T::of(x)).collect::<Vec<T>>();
        Self {
            rows: b.len(),
            state_dim: b.state_dim,
            action_dim: b.action_dim,
            states: cv(&b.states),
            actions: cv(&b.actions),
            rewards: cv(&b.rewards),
            next_states: cv(&b.next_states),
        }
    }
}

/// Row-wise concatenation `[s | a]`, the critic input layout.
pub fn concat_rows<T: Real>(s: &[T], a: &[T], rows: usize, sd: usize, ad: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(rows * (sd + ad));
    for (sr, ar) in s.chunks_exact(sd).zip(a.chunks_exact(ad)).take(rows) {
        out.extend_from_slice(sr);
        out.extend_from_slice(ar);
    }
    out
}

/// Which actor produces the next action inside the bootstrap target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetAction {
    #[default]
    Target,
    Online,
}

/// `N` online critics and their target copies. Targets take the minimum
/// over a random subset of `M` target critics; the actor sees the mean of
/// the online critics.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticEnsemble<T> {
    pub online: Vec<Mlp<T>>,
    pub target: Vec<Mlp<T>>,
    subset_size: usize,
}

impl<T: Real> CriticEnsemble<T> {
    /// Critic `i` is initialised with seed `mix(seed, i)`.
    pub fn new(state_dim: usize, action_dim: usize, hidden: &[usize], n: usize, m: usize, seed: u64) -> Result<Self> {
        let mut sizes = vec![state_dim + action_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let online = (0..n)
            .map(|i| Mlp::new(&sizes, Activation::Relu, Activation::Identity, crate::rng::mix(seed, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_nets(online.clone(), online, m)
    }

    pub fn from_nets(online: Vec<Mlp<T>>, target: Vec<Mlp<T>>, m: usize) -> Result<Self> {
        let n = online.len();
        if n < 2 || target.len() != n {
            return Err(Error::Config(format!(
                "ensemble needs N >= 2 online and as many targets (got {n} / {})",
                target.len()
            )));
        }
        if m == 0 || m > n {
            return Err(Error::Config(format!("subset size M = {m} must lie in 1..={n}")));
        }
        let first = &online[0];
        if first.output_dim() != 1 || online.iter().chain(&target).any(|c| !c.same_shape(first)) {
            return Err(Error::Shape("critics must be shape-identical with scalar output".into()));
        }
        Ok(Self { online, target, subset_size: m })
    }

    pub fn n(&self) -> usize {
        self.online.len()
    }

    pub fn m(&self) -> usize {
        self.subset_size
    }

    pub fn input_dim(&self) -> usize {
        self.online[0].input_dim()
    }

    /// `M` distinct indices drawn uniformly without replacement.
    pub fn draw_subset(&self, rng: &mut Rng) -> Vec<usize> {
        index::sample(rng, self.n(), self.subset_size).into_vec()
    }

    pub fn check_subset(&self, subset: &[usize]) -> Result<()> {
        if subset.is_empty() {
            return Err(Error::Validation("empty critic subset".into()));
        }
        for (k, &i) in subset.iter().enumerate() {
            if i >= self.n() {
                return Err(Error::Validation(format!("critic index {i} out of range 0..{}", self.n())));
            }
            if subset[..k].contains(&i) {
                return Err(Error::Validation(format!("critic index {i} repeated in subset")));
            }
        }
        Ok(())
    }

    /// Row-wise `min_{i in subset} Q'_i(s, a)` over `rows` pairs.
    pub fn target_min(&self, s: &[T], a: &[T], rows: usize, subset: &[usize]) -> Result<Vec<T>> {
        self.check_subset(subset)?;
        let (sd, ad) = self.split_dims(s, a, rows)?;
        let input = concat_rows(s, a, rows, sd, ad);
        let mut out = vec![T::infinity(); rows];
        for &i in subset {
            let q = self.target[i].predict(&input, rows)?;
            for (o, qi) in out.iter_mut().zip(q) {
                *o = o.min(qi);
            }
        }
        Ok(out)
    }

    /// Single-pair target value: the minimum over `subset` of the target critics.
    pub fn target_q(&self, s_next: &[T], a_next: &[T], subset: &[usize]) -> Result<T> {
        Ok(self.target_min(s_next, a_next, 1, subset)?[0])
    }

    /// Per-critic online values for `rows` pairs, critic-major.
    pub fn online_values(&self, s: &[T], a: &[T], rows: usize) -> Result<Vec<Vec<T>>> {
        let (sd, ad) = self.split_dims(s, a, rows)?;
        let input = concat_rows(s, a, rows, sd, ad);
        self.online.iter().map(|c| c.predict(&input, rows)).collect()
    }

    /// Mean of the online critics at a single pair.
    pub fn actor_q_mean(&self, s: &[T], a_hat: &[T]) -> Result<T> {
        let vals = self.online_values(s, a_hat, 1)?;
        let sum: T = vals.iter().map(|v| v[0]).sum();
        Ok(sum / T::of(self.n() as f64))
    }

    fn split_dims(&self, s: &[T], a: &[T], rows: usize) -> Result<(usize, usize)> {
        if rows == 0 || s.len() % rows != 0 || a.len() % rows != 0 {
            return Err(Error::Shape(format!("{} state / {} action values for {rows} rows", s.len(), a.len())));
        }
        let (sd, ad) = (s.len() / rows, a.len() / rows);
        if sd + ad != self.input_dim() {
            return Err(Error::Shape(format!("critic expects {} inputs, got {sd} + {ad}", self.input_dim())));
        }
        Ok((sd, ad))
    }
}

/// Bootstrap targets `y = r + gamma * min_{i in S} Q'_i(s', a')` with
/// `a' = clip(pi(s') + clip(N(0, sigma), -c, c), ±bound)`.
///
/// The subset `S` is drawn first, then the smoothing noise row by row.
/// Episodes end only at the time limit, so every row bootstraps.
pub fn critic_targets<T: Real>(
    ens: &CriticEnsemble<T>,
    actor: &Actor<T>,
    batch: &TensorBatch<T>,
    gamma: f64,
    noise: &ExplorationNoise,
    which: TargetAction,
    rng: &mut Rng,
) -> Result<(Vec<T>, Vec<usize>)> {
    let subset = ens.draw_subset(rng);
    let rows = batch.rows;
    let mut a_next = match which {
        TargetAction::Target => actor.act_target(&batch.next_states, rows)?,
        TargetAction::Online => actor.act(&batch.next_states, rows)?,
    };
    let bound = actor.bound();
    for x in a_next.iter_mut() {
        let eps = noise.sample(rng);
        *x = T::of((x.f64() + eps).clamp(-bound, bound));
    }
    let g = T::of(gamma);
    let y = if gamma == 0.0 {
        batch.rewards.clone()
    } else {
        let q = ens.target_min(&batch.next_states, &a_next, rows, &subset)?;
        batch.rewards.iter().zip(q).map(|(&r, q)| r + g * q).collect()
    };
    Ok((y, subset))
}

/// `sum_rows (Q(s, a) - y)^2` and its gradient for one critic. `y` is a
/// constant; target networks play no part here.
pub fn critic_loss_and_grads<T: Real>(critic: &Mlp<T>, input: &[T], y: &[T]) -> Result<(T, Vec<T>)> {
    if let Some(k) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite critic target at row {k}")));
    }
    let rows = y.len();
    let cache = critic.forward(input, rows)?;
    let two = T::of(2.0);
    let mut loss = T::zero();
    let dq: Vec<T> = cache
        .output()
        .iter()
        .zip(y)
        .map(|(&q, &t)| {
            let d = q - t;
            loss = loss + d * d;
            two * d
        })
        .collect();
    let g = critic.backward(&cache, &dq, true, false)?;
    Ok((loss, g.params))
}

/// `sum_rows [ -mean_i Q_i(s, pi(s)) + lambda * ||a - pi(s)||^2 ]` and its
/// gradient with respect to the online actor parameters. Critic parameters
/// are frozen; the gradient flows through their action inputs. Per-critic
/// contributions are accumulated in index order so the parallel path is
/// bit-identical to the sequential one.
pub fn actor_loss_and_grads<T: Real>(
    ens: &CriticEnsemble<T>,
    actor: &Actor<T>,
    batch: &TensorBatch<T>,
    lambda: f64,
    parallel: bool,
) -> Result<(T, Vec<T>)> {
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
    }
    let (rows, sd, ad) = (batch.rows, batch.state_dim, batch.action_dim);
    let (cache, a_hat) = actor.forward(&batch.states, rows)?;
    let input = concat_rows(&batch.states, &a_hat, rows, sd, ad);
    let n = ens.n();
    let inv_n = T::of(1.0 / n as f64);
    let neg = vec![-inv_n; rows];
    let per_critic = par::map_indexed(parallel, n, |i| -> Result<(Vec<T>, Vec<T>)> {
        let c = &ens.online[i];
        let fc = c.forward(&input, rows)?;
        let g = c.backward(&fc, &neg, false, true)?;
        Ok((fc.into_output(), g.input))
    });

    let mut loss = T::zero();
    let mut da = vec![T::zero(); rows * ad];
    for r in per_critic {
        let (q, gin) = r?;
        for v in q {
            loss = loss - v * inv_n;
        }
        for (dr, gr) in da.chunks_exact_mut(ad).zip(gin.chunks_exact(sd + ad)) {
            for (d, &g) in dr.iter_mut().zip(&gr[sd..]) {
                *d = *d + g;
            }
        }
    }
    if lambda > 0.0 {
        let lam = T::of(lambda);
        let two_lam = T::of(2.0 * lambda);
        for ((d, &p), &a) in da.iter_mut().zip(&a_hat).zip(&batch.actions) {
            let diff = p - a;
            loss = loss + lam * diff * diff;
            *d = *d + two_lam * diff;
        }
    }
    if !loss.is_finite() {
        return Err(Error::Numeric("non-finite actor loss".into()));
    }
    let bound = T::of(actor.bound());
    da.iter_mut().for_each(|d| *d = *d * bound);
    let g = actor.online.backward(&cache, &da, true, false)?;
    Ok((loss, g.params))
}
