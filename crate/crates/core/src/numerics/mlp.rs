use std::fmt::Write as _;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Real;
use crate::textio::LineReader;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    pub fn tag(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "identity" => Some(Activation::Identity),
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            _ => None,
        }
    }

    #[inline]
    fn apply<T: Real>(self, v: &mut [T]) {
        match self {
            Activation::Identity => {}
            Activation::Relu => v.iter_mut().for_each(|x| *x = x.max(T::zero())),
            Activation::Tanh => v.iter_mut().for_each(|x| *x = x.tanh()),
        }
    }

    /// Multiplies `grad` by the derivative, expressed through the
    /// post-activation values `out`.
    #[inline]
    fn backprop<T: Real>(self, out: &[T], grad: &mut [T]) {
        match self {
            Activation::Identity => {}
            Activation::Relu => {
                for (g, &y) in grad.iter_mut().zip(out) {
                    if y <= T::zero() {
                        *g = T::zero();
                    }
                }
            }
            Activation::Tanh => {
                for (g, &y) in grad.iter_mut().zip(out) {
                    *g = *g * (T::one() - y * y);
                }
            }
        }
    }
}

/// A dense feed-forward network.
///
/// Layer `l` maps `sizes[l]` inputs to `sizes[l + 1]` outputs with an
/// `out x in` row-major weight matrix followed by a bias vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<T> {
    sizes: Vec<usize>,
    activations: Vec<Activation>,
    params: Vec<T>,
    offsets: Vec<usize>,
}

/// Post-activation values of every layer for one batch; `acts[0]` is the input.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    batch: usize,
    sizes: Vec<usize>,
    acts: Vec<Vec<T>>,
}

impl<T: Real> ForwardCache<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn output(&self) -> &[T] {
        self.acts.last().expect("cache always holds the input")
    }

    pub fn into_output(mut self) -> Vec<T> {
        self.acts.pop().expect("cache always holds the input")
    }
}

/// Gradient of `sum(output * output_grad)` with respect to the flat
/// parameter buffer and to the network input (batch x input_dim).
/// Either part is empty when it was not requested.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub params: Vec<T>,
    pub input: Vec<T>,
}

fn layout(sizes: &[usize]) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(sizes.len() - 1);
    let mut total = 0;
    for w in sizes.windows(2) {
        offsets.push(total);
        total += w[0] * w[1] + w[1];
    }
    (offsets, total)
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::Config(format!("layer sizes must have at least two entries, all >= 1 (got {sizes:?})")));
    }
    Ok(())
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] = acc[0] + x[0] * y[0];
        acc[1] = acc[1] + x[1] * y[1];
        acc[2] = acc[2] + x[2] * y[2];
        acc[3] = acc[3] + x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (&x, &y) in ra.iter().zip(rb) {
        s = s + x * y;
    }
    s
}

#[inline]
fn axpy<T: Real>(y: &mut [T], alpha: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

impl<T: Real> Mlp<T> {
    /// Hidden layers use `hidden`, the last layer uses `output`. Weights are
    /// uniform in `±sqrt(6 / (fan_in + fan_out))` from a ChaCha8 stream seeded
    /// with `seed`; biases start at zero.
    pub fn new(sizes: &[usize], hidden: Activation, output: Activation, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(sizes, hidden, output)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in 0..net.n_layers() {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in net.weights_mut(l) {
                *w = T::of(rng.random_range(-limit..limit));
            }
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        check_sizes(sizes)?;
        let n_layers = sizes.len() - 1;
        let mut activations = vec![hidden; n_layers];
        activations[n_layers - 1] = output;
        let (offsets, total) = layout(sizes);
        Ok(Self { sizes: sizes.to_vec(), activations, params: vec![T::zero(); total], offsets })
    }

    pub fn from_parts(sizes: &[usize], activations: &[Activation], params: Vec<T>) -> Result<Self> {
        check_sizes(sizes)?;
        if activations.len() != sizes.len() - 1 {
            return Err(Error::Shape(format!("{} activations for {} layers", activations.len(), sizes.len() - 1)));
        }
        let (offsets, total) = layout(sizes);
        if params.len() != total {
            return Err(Error::Shape(format!("expected {total} parameters, got {}", params.len())));
        }
        let net = Self { sizes: sizes.to_vec(), activations: activations.to_vec(), params, offsets };
        if let Some(i) = net.params.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite { layer: net.layer_of(i), what: "parameter" });
        }
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.sizes == other.sizes && self.activations == other.activations
    }

    fn weight_range(&self, l: usize) -> std::ops::Range<usize> {
        let start = self.offsets[l];
        start..start + self.sizes[l] * self.sizes[l + 1]
    }

    fn bias_range(&self, l: usize) -> std::ops::Range<usize> {
        let end = self.weight_range(l).end;
        end..end + self.sizes[l + 1]
    }

    pub fn weights(&self, l: usize) -> &[T] {
        &self.params[self.weight_range(l)]
    }

    pub fn weights_mut(&mut self, l: usize) -> &mut [T] {
        let r = self.weight_range(l);
        &mut self.params[r]
    }

    pub fn bias(&self, l: usize) -> &[T] {
        &self.params[self.bias_range(l)]
    }

    pub fn bias_mut(&mut self, l: usize) -> &mut [T] {
        let r = self.bias_range(l);
        &mut self.params[r]
    }

    /// Layer owning flat parameter `index`.
    pub fn layer_of(&self, index: usize) -> usize {
        self.offsets.partition_point(|&o| o <= index).saturating_sub(1)
    }

    pub fn cast<U: Real>(&self) -> Mlp<U> {
        Mlp {
            sizes: self.sizes.clone(),
            activations: self.activations.clone(),
            params: self.params.iter().map(|p| U::of(p.f64())).collect(),
            offsets: self.offsets.clone(),
        }
    }

    /// Forward pass over `batch` rows stored row-major in `input`.
    pub fn forward(&self, input: &[T], batch: usize) -> Result<ForwardCache<T>> {
        let in_dim = self.input_dim();
        if input.len() != batch * in_dim {
            return Err(Error::Shape(format!("input of length {} for batch {batch} x {in_dim}", input.len())));
        }
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(input.to_vec());
        for l in 0..self.n_layers() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let w = self.weights(l);
            let b = self.bias(l);
            let x = &acts[l];
            let mut y = vec![T::zero(); batch * o];
            for (xr, yr) in x.chunks_exact(i).zip(y.chunks_exact_mut(o)) {
                for ((yj, wj), &bj) in yr.iter_mut().zip(w.chunks_exact(i)).zip(b) {
                    *yj = bj + dot(wj, xr);
                }
            }
            self.activations[l].apply(&mut y);
            acts.push(y);
        }
        Ok(ForwardCache { batch, sizes: self.sizes.clone(), acts })
    }

    pub fn predict(&self, input: &[T], batch: usize) -> Result<Vec<T>> {
        Ok(self.forward(input, batch)?.into_output())
    }

    /// Backward pass for the loss `sum(output * output_grad)`; parameter
    /// gradients are summed over the batch.
    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        output_grad: &[T],
        want_params: bool,
        want_input: bool,
    ) -> Result<Gradients<T>> {
        if cache.sizes != self.sizes {
            return Err(Error::Shape(format!("cache for layers {:?} used with network {:?}", cache.sizes, self.sizes)));
        }
        let batch = cache.batch;
        if output_grad.len() != batch * self.output_dim() {
            return Err(Error::Shape(format!(
                "output gradient of length {} for batch {batch} x {}",
                output_grad.len(),
                self.output_dim()
            )));
        }
        let mut params = if want_params { vec![T::zero(); self.params.len()] } else { Vec::new() };
        let mut delta = output_grad.to_vec();
        for l in (0..self.n_layers()).rev() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            self.activations[l].backprop(&cache.acts[l + 1], &mut delta);
            let x = &cache.acts[l];
            if want_params {
                let (gw, gb) = params[self.offsets[l]..].split_at_mut(i * o);
                for (xr, dr) in x.chunks_exact(i).zip(delta.chunks_exact(o)) {
                    for ((gwj, gbj), &d) in gw.chunks_exact_mut(i).zip(gb.iter_mut()).zip(dr) {
                        if d != T::zero() {
                            axpy(gwj, d, xr);
                            *gbj = *gbj + d;
                        }
                    }
                }
            }
            if l == 0 && !want_input {
                delta.clear();
                break;
            }
            let w = self.weights(l);
            let mut dx = vec![T::zero(); batch * i];
            for (dxr, dr) in dx.chunks_exact_mut(i).zip(delta.chunks_exact(o)) {
                for (wj, &d) in w.chunks_exact(i).zip(dr) {
                    if d != T::zero() {
                        axpy(dxr, d, wj);
                    }
                }
            }
            delta = dx;
        }
        Ok(Gradients { params, input: delta })
    }

    /// Textual checkpoint block. Values use the shortest representation that
    /// parses back to the identical bit pattern.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "mlp {}", T::TAG).unwrap();
        let sizes: Vec<String> = self.sizes.iter().map(|v| v.to_string()).collect();
        writeln!(s, "sizes {}", sizes.join(" ")).unwrap();
        let acts: Vec<&str> = self.activations.iter().map(|a| a.tag()).collect();
        writeln!(s, "activations {}", acts.join(" ")).unwrap();
        for l in 0..self.n_layers() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            writeln!(s, "weights {l} {o} {i}").unwrap();
            for row in self.weights(l).chunks_exact(i) {
                push_row(&mut s, row);
            }
            writeln!(s, "bias {l} {o}").unwrap();
            push_row(&mut s, self.bias(l));
        }
        s.push_str("end mlp\n");
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read(&mut LineReader::new(text))
    }

    pub(crate) fn read(r: &mut LineReader<'_>) -> Result<Self> {
        let head = r.expect("mlp")?;
        if head.first().copied() != Some(T::TAG) {
            return Err(Error::parse(r.line(), format!("network stored as {:?}, expected {}", head.first(), T::TAG)));
        }
        let toks = r.expect("sizes")?;
        let sizes: Vec<usize> = r.parse_all(&toks)?;
        check_sizes(&sizes)?;
        let toks = r.expect("activations")?;
        let activations = toks
            .iter()
            .map(|t| Activation::from_tag(t).ok_or_else(|| Error::parse(r.line(), format!("unknown activation `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        let mut params = Vec::new();
        for l in 0..sizes.len() - 1 {
            let (i, o) = (sizes[l], sizes[l + 1]);
            let toks = r.expect("weights")?;
            let dims: Vec<usize> = r.parse_all(&toks)?;
            if dims != [l, o, i] {
                return Err(Error::parse(r.line(), format!("weights header {dims:?} does not match layer {l}")));
            }
            for _ in 0..o {
                params.extend(r.values::<T>(i)?);
            }
            let toks = r.expect("bias")?;
            let dims: Vec<usize> = r.parse_all(&toks)?;
            if dims != [l, o] {
                return Err(Error::parse(r.line(), format!("bias header {dims:?} does not match layer {l}")));
            }
            params.extend(r.values::<T>(o)?);
        }
        r.expect("end")?;
        Self::from_parts(&sizes, &activations, params)
    }
}

fn push_row<T: Real>(s: &mut String, row: &[T]) {
    for (k, v) in row.iter().enumerate() {
        if k > 0 {
            s.push(' ');
        }
        write!(s, "{v:?}").unwrap();
    }
    s.push('\n');
}

/// `target <- tau * online + (1 - tau) * target`, elementwise.
pub fn polyak_update<T: Real>(target: &mut Mlp<T>, online: &Mlp<T>, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Config(format!("tau must lie in (0, 1], got {tau}")));
    }
    if !target.same_shape(online) {
        return Err(Error::Shape(format!("polyak target {:?} vs online {:?}", target.sizes, online.sizes)));
    }
    let t = T::of(tau);
    let keep = T::of(1.0 - tau);
    for (p, &q) in target.params.iter_mut().zip(&online.params) {
        *p = t * q + keep * *p;
    }
    Ok(())
}
