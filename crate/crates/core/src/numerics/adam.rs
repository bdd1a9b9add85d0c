use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Mlp, Real};
use crate::textio::LineReader;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 3e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

/// Adam with bias correction; moments are shaped like the network's flat
/// parameter buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam<T> {
    pub config: AdamConfig,
    step: u64,
    m: Vec<T>,
    v: Vec<T>,
}

impl<T: Real> Adam<T> {
    pub fn new(n_params: usize, config: AdamConfig) -> Self {
        Self { config, step: 0, m: vec![T::zero(); n_params], v: vec![T::zero(); n_params] }
    }

    pub fn for_net(net: &Mlp<T>, config: AdamConfig) -> Self {
        Self::new(net.n_params(), config)
    }

    pub fn n_params(&self) -> usize {
        self.m.len()
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update in place. Gradients are validated before any
    /// parameter or moment is touched.
    pub fn step(&mut self, net: &mut Mlp<T>, grads: &[T]) -> Result<()> {
        if grads.len() != net.n_params() || self.m.len() != net.n_params() {
            return Err(Error::Shape(format!(
                "adam state for {} params, network has {}, gradient has {}",
                self.m.len(),
                net.n_params(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite { layer: net.layer_of(i), what: "gradient" });
        }
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
        let (one_b1, one_b2) = (T::of(1.0 - c.beta1), T::of(1.0 - c.beta2));
        let corr1 = T::of(1.0 - c.beta1.powi(t));
        let corr2 = T::of(1.0 - c.beta2.powi(t));
        let lr = T::of(c.lr);
        let eps = T::of(c.eps);
        for ((p, &g), (m, v)) in net.params_mut().iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = b1 * *m + one_b1 * g;
            *v = b2 * *v + one_b2 * g * g;
            let m_hat = *m / corr1;
            let v_hat = *v / corr2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let c = self.config;
        let mut s = format!(
            "adam {} {} {:?} {:?} {:?} {:?} {}\n",
            T::TAG,
            self.step,
            c.lr,
            c.beta1,
            c.beta2,
            c.eps,
            self.m.len()
        );
        for vec in [&self.m, &self.v] {
            for (k, x) in vec.iter().enumerate() {
                if k > 0 {
                    s.push(' ');
                }
                write!(s, "{x:?}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub(crate) fn read(r: &mut LineReader<'_>) -> Result<Self> {
        let h = r.expect("adam")?;
        if h.len() != 7 || h[0] != T::TAG {
            return Err(Error::parse(r.line(), "malformed adam header"));
        }
        let step = r.parse(h[1])?;
        let config =
            AdamConfig { lr: r.parse(h[2])?, beta1: r.parse(h[3])?, beta2: r.parse(h[4])?, eps: r.parse(h[5])? };
        let n: usize = r.parse(h[6])?;
        let m = r.values(n)?;
        let v = r.values(n)?;
        Ok(Self { config, step, m, v })
    }
}
