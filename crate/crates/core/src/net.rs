//! A small fully connected scorer trained with manual backpropagation and
//! AdamW.
//!
//! Inputs are batched row-wise: a batch is an `n x in` matrix and the
//! network returns an `n x out` matrix of raw scores.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::discriminant::SampleSet;
use crate::error::{DdaError, Result};
use crate::loss::{BinaryVariant, Objective};
use crate::numerics::{Matrix, Vector};
use crate::scalar::Scalar;
use crate::synthdata::{rng, stream_rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    ReLU,
    Tanh,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::ReLU => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::ReLU),
            "tanh" => Some(Activation::Tanh),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }

    #[inline]
    fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::ReLU => z.max(T::zero()),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn slope<T: Scalar>(self, a: T) -> T {
        match self {
            Activation::ReLU => {
                if a > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - a * a,
            Activation::Identity => T::one(),
        }
    }
}

/// Affine map `a = act(W x + b)` with `W` stored `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub weights: Matrix<T>,
    pub biases: Vector<T>,
    pub activation: Activation,
}

impl<T: Scalar> Layer<T> {
    pub fn new(
        weights: Matrix<T>,
        biases: impl Into<Vector<T>>,
        activation: Activation,
    ) -> Result<Self> {
        let biases = biases.into();
        if biases.len() != weights.rows() {
            return Err(DdaError::DimensionMismatch(format!(
                "{} biases for a layer with {} outputs",
                biases.len(),
                weights.rows()
            )));
        }
        Ok(Self {
            weights,
            biases,
            activation,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    fn forward(&self, x: &Matrix<T>) -> Matrix<T> {
        let (n, out) = (x.rows(), self.outputs());
        let mut a = Matrix::zeros(n, out);
        for i in 0..n {
            let xi = x.row(i);
            let ai = a.row_mut(i);
            for (j, aij) in ai.iter_mut().enumerate() {
                let w = self.weights.row(j);
                let mut z = self.biases[j];
                for (&wk, &xk) in w.iter().zip(xi) {
                    z += wk * xk;
                }
                *aij = self.activation.apply(z);
            }
        }
        a
    }
}

/// Gradient (or moment) buffers shaped like one layer's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<T> {
    pub weights: Matrix<T>,
    pub biases: Vector<T>,
}

impl<T: Scalar> LayerParams<T> {
    fn zeros_like(layer: &Layer<T>) -> Self {
        Self {
            weights: Matrix::zeros(layer.outputs(), layer.inputs()),
            biases: Vector::zeros(layer.outputs()),
        }
    }
}

pub type Gradients<T> = Vec<LayerParams<T>>;

/// Flattened in the same order as [`NetState::parameters`].
pub fn flatten_grads<T: Scalar>(grads: &Gradients<T>) -> Vec<T> {
    grads
        .iter()
        .flat_map(|g| g.weights.as_slice().iter().chain(g.biases.iter()).copied())
        .collect()
}

/// Per-layer outputs from [`NetState::forward`]; entry 0 is the input batch.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    activations: Vec<Matrix<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn output(&self) -> &Matrix<T> {
        self.activations
            .last()
            .expect("cache holds at least the input")
    }
}

/// Network parameters together with the optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct NetState<T> {
    layers: Vec<Layer<T>>,
    first_moment: Gradients<T>,
    second_moment: Gradients<T>,
    step: u64,
}

impl<T: Scalar> NetState<T> {
    pub fn new(layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(DdaError::InvalidInput(
                "a network needs at least one layer".into(),
            ));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(DdaError::DimensionMismatch(format!(
                    "layer {i} emits {} values but layer {} expects {}",
                    pair[0].outputs(),
                    i + 1,
                    pair[1].inputs()
                )));
            }
        }
        let zeros: Gradients<T> = layers.iter().map(LayerParams::zeros_like).collect();
        Ok(Self {
            layers,
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
        })
    }

    /// Glorot-uniform weights, zero biases. `sizes` lists every width from
    /// input to output; hidden layers use `hidden`, the last layer is linear.
    pub fn init(sizes: &[usize], hidden: Activation, seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(DdaError::InvalidInput(format!("bad layer sizes {sizes:?}")));
        }
        let mut r = rng(seed);
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| T::lit(r.random_range(-limit..=limit)))
                    .collect();
                let act = if i == last {
                    Activation::Identity
                } else {
                    hidden
                };
                Layer::new(
                    Matrix::from_vec(fan_out, fan_in, data)?,
                    Vector::zeros(fan_out),
                    act,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    /// Layer widths from input to output.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Layer::outputs))
            .collect()
    }

    /// Number of AdamW updates applied so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.biases.len())
            .sum()
    }

    /// All parameters, layer by layer, weights (row-major) before biases.
    pub fn parameters(&self) -> Vec<T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.as_slice().iter().chain(l.biases.iter()).copied())
            .collect()
    }

    pub fn set_parameters(&mut self, values: &[T]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(DdaError::DimensionMismatch(format!(
                "{} values for {} parameters",
                values.len(),
                self.parameter_count()
            )));
        }
        let mut it = values.iter().copied();
        for l in &mut self.layers {
            for (p, v) in l
                .weights
                .as_mut_slice()
                .iter_mut()
                .chain(l.biases.iter_mut())
                .zip(&mut it)
            {
                *p = v;
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &Matrix<T>) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(DdaError::DimensionMismatch(format!(
                "inputs have {} features, network expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Matrix<T>) -> Result<(Matrix<T>, ForwardCache<T>)> {
        self.check_input(x)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.clone());
        for l in &self.layers {
            let a = l.forward(activations.last().expect("non-empty"));
            activations.push(a);
        }
        let scores = activations.last().expect("non-empty").clone();
        Ok((scores, ForwardCache { activations }))
    }

    /// Scores only, without keeping intermediate activations.
    pub fn predict(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_input(x)?;
        let mut a = self.layers[0].forward(x);
        for l in &self.layers[1..] {
            a = l.forward(&a);
        }
        Ok(a)
    }

    /// Parameter gradients given `dL/dscores` for every sample in the batch.
    pub fn backward(&self, cache: &ForwardCache<T>, upstream: &Matrix<T>) -> Result<Gradients<T>> {
        let acts = &cache.activations;
        if acts.len() != self.layers.len() + 1 || upstream.shape() != cache.output().shape() {
            return Err(DdaError::DimensionMismatch(format!(
                "upstream gradient {:?} does not match cached output {:?}",
                upstream.shape(),
                cache.output().shape()
            )));
        }
        let n = upstream.rows();
        let mut grads: Gradients<T> = self.layers.iter().map(LayerParams::zeros_like).collect();
        let mut delta = upstream.clone();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let out = &acts[li + 1];
            for (d, &a) in delta.as_mut_slice().iter_mut().zip(out.as_slice()) {
                *d *= layer.activation.slope(a);
            }
            let input = &acts[li];
            let g = &mut grads[li];
            for i in 0..n {
                let di = delta.row(i);
                let xi = input.row(i);
                for (j, &dij) in di.iter().enumerate() {
                    if dij == T::zero() {
                        continue;
                    }
                    g.biases[j] += dij;
                    for (gw, &xk) in g.weights.row_mut(j).iter_mut().zip(xi) {
                        *gw += dij * xk;
                    }
                }
            }
            if li > 0 {
                let mut prev = Matrix::zeros(n, layer.inputs());
                for i in 0..n {
                    let di = delta.row(i);
                    let pi = prev.row_mut(i);
                    for (j, &dij) in di.iter().enumerate() {
                        if dij == T::zero() {
                            continue;
                        }
                        for (p, &w) in pi.iter_mut().zip(layer.weights.row(j)) {
                            *p += dij * w;
                        }
                    }
                }
                delta = prev;
            }
        }
        Ok(grads)
    }

    /// One AdamW update with bias-corrected moments and decoupled decay:
    /// `theta -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)`.
    pub fn adamw_step(&mut self, grads: &Gradients<T>, cfg: &AdamW<T>) -> Result<()> {
        if grads.len() != self.layers.len()
            || grads.iter().zip(&self.layers).any(|(g, l)| {
                g.weights.shape() != l.weights.shape() || g.biases.len() != l.biases.len()
            })
        {
            return Err(DdaError::DimensionMismatch(
                "gradients do not match the network".into(),
            ));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = T::one() - cfg.beta1.powi(t);
        let c2 = T::one() - cfg.beta2.powi(t);
        for (((layer, g), m), v) in self
            .layers
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            let params = layer
                .weights
                .as_mut_slice()
                .iter_mut()
                .chain(layer.biases.iter_mut());
            let gs = g.weights.as_slice().iter().chain(g.biases.iter());
            let ms = m
                .weights
                .as_mut_slice()
                .iter_mut()
                .chain(m.biases.iter_mut());
            let vs = v
                .weights
                .as_mut_slice()
                .iter_mut()
                .chain(v.biases.iter_mut());
            for (((p, &gi), mi), vi) in params.zip(gs).zip(ms).zip(vs) {
                *mi = cfg.beta1 * *mi + (T::one() - cfg.beta1) * gi;
                *vi = cfg.beta2 * *vi + (T::one() - cfg.beta2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *p -= cfg.lr * (m_hat / (v_hat.sqrt() + cfg.eps) + cfg.weight_decay * *p);
            }
        }
        Ok(())
    }

    /// Negates a linear single-output layer when class 1 scores below class 0
    /// on average, so larger scores mean foreground. Objectives that are
    /// invariant to the sign of the scores leave this undetermined. Returns
    /// whether the output was flipped.
    pub fn orient_to_labels(&mut self, x: &Matrix<T>, labels: &[usize]) -> Result<bool> {
        let last = self.layers.len() - 1;
        if self.output_dim() != 1 || self.layers[last].activation != Activation::Identity {
            return Ok(false);
        }
        let scores = self.predict(x)?;
        let (mut sum, mut n) = ([T::zero(); 2], [0usize; 2]);
        for (&s, &l) in scores.as_slice().iter().zip(labels) {
            if l < 2 {
                sum[l] += s;
                n[l] += 1;
            }
        }
        if n[0] == 0 || n[1] == 0 || sum[1] / T::from_count(n[1]) >= sum[0] / T::from_count(n[0]) {
            return Ok(false);
        }
        let layer = &mut self.layers[last];
        let m = &mut self.first_moment[last];
        for v in layer
            .weights
            .as_mut_slice()
            .iter_mut()
            .chain(layer.biases.iter_mut())
        {
            *v = -*v;
        }
        for v in m
            .weights
            .as_mut_slice()
            .iter_mut()
            .chain(m.biases.iter_mut())
        {
            *v = -*v;
        }
        Ok(true)
    }

    /// Plain-text dump of shapes, parameters, moments and step counter.
    /// Values use the shortest representation that parses back exactly.
    pub fn to_checkpoint(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{CHECKPOINT_MAGIC}");
        let _ = writeln!(s, "step {}", self.step);
        let _ = writeln!(s, "layers {}", self.layers.len());
        let line = |s: &mut String, tag: &str, vals: &mut dyn Iterator<Item = &T>| {
            s.push_str(tag);
            for v in vals {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        };
        for ((l, m), v) in self
            .layers
            .iter()
            .zip(&self.first_moment)
            .zip(&self.second_moment)
        {
            let _ = writeln!(
                s,
                "layer {} {} {}",
                l.inputs(),
                l.outputs(),
                l.activation.name()
            );
            line(&mut s, "w", &mut l.weights.as_slice().iter());
            line(&mut s, "b", &mut l.biases.iter());
            line(&mut s, "mw", &mut m.weights.as_slice().iter());
            line(&mut s, "mb", &mut m.biases.iter());
            line(&mut s, "vw", &mut v.weights.as_slice().iter());
            line(&mut s, "vb", &mut v.biases.iter());
        }
        s
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let bad = |msg: String| DdaError::Checkpoint(msg);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = |what: &str| lines.next().ok_or_else(|| bad(format!("missing {what}")));
        let magic = next("header")?;
        if magic.trim() != CHECKPOINT_MAGIC {
            return Err(bad(format!("unrecognized header `{magic}`")));
        }
        let field = |line: &str, key: &str| -> Result<usize> {
            line.strip_prefix(key)
                .and_then(|r| r.trim().parse().ok())
                .ok_or_else(|| bad(format!("expected `{key} <count>`, found `{line}`")))
        };
        let step = field(next("step")?, "step")? as u64;
        let count = field(next("layer count")?, "layers")?;
        let mut layers = Vec::with_capacity(count);
        let mut first = Vec::with_capacity(count);
        let mut second = Vec::with_capacity(count);
        for li in 0..count {
            let head = next("layer header")?;
            let parts: Vec<&str> = head.split_whitespace().collect();
            let (inputs, outputs, act) = match parts.as_slice() {
                ["layer", i, o, a] => (
                    i.parse::<usize>()
                        .map_err(|e| bad(format!("layer {li}: {e}")))?,
                    o.parse::<usize>()
                        .map_err(|e| bad(format!("layer {li}: {e}")))?,
                    Activation::parse(a)
                        .ok_or_else(|| bad(format!("layer {li}: unknown activation `{a}`")))?,
                ),
                _ => return Err(bad(format!("bad layer header `{head}`"))),
            };
            let mut values = |tag: &str, len: usize| -> Result<Vec<T>> {
                let line = next(tag)?;
                let mut it = line.split_whitespace();
                if it.next() != Some(tag) {
                    return Err(bad(format!(
                        "layer {li}: expected `{tag}` line, found `{line}`"
                    )));
                }
                let v = it
                    .map(|x| {
                        x.parse::<T>()
                            .map_err(|_| bad(format!("layer {li}: bad number `{x}`")))
                    })
                    .collect::<Result<Vec<T>>>()?;
                if v.len() != len {
                    return Err(bad(format!(
                        "layer {li}: `{tag}` has {} values, expected {len}",
                        v.len()
                    )));
                }
                Ok(v)
            };
            let w = Matrix::from_vec(outputs, inputs, values("w", inputs * outputs)?)?;
            let b = Vector::new(values("b", outputs)?);
            let mw = Matrix::from_vec(outputs, inputs, values("mw", inputs * outputs)?)?;
            let mb = Vector::new(values("mb", outputs)?);
            let vw = Matrix::from_vec(outputs, inputs, values("vw", inputs * outputs)?)?;
            let vb = Vector::new(values("vb", outputs)?);
            layers.push(Layer::new(w, b, act)?);
            first.push(LayerParams {
                weights: mw,
                biases: mb,
            });
            second.push(LayerParams {
                weights: vw,
                biases: vb,
            });
        }
        let mut net = Self::new(layers)?;
        net.first_moment = first;
        net.second_moment = second;
        net.step = step;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_checkpoint())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&fs::read_to_string(path)?)
    }
}

const CHECKPOINT_MAGIC: &str = "ddakit-net v1";

/// AdamW hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamW<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub weight_decay: T,
    pub eps: T,
}

impl<T: Scalar> Default for AdamW<T> {
    fn default() -> Self {
        Self {
            lr: T::lit(1e-3),
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            weight_decay: T::lit(0.01),
            eps: T::lit(1e-8),
        }
    }
}

impl<T: Scalar> AdamW<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |b: T| b >= T::zero() && b < T::one();
        if !(self.lr >= T::zero()) || !(self.eps > T::zero()) || !(self.weight_decay >= T::zero()) {
            return Err(DdaError::InvalidInput(format!(
                "need lr >= 0, eps > 0, weight_decay >= 0 (got {}, {}, {})",
                self.lr, self.eps, self.weight_decay
            )));
        }
        if !unit(self.beta1) || !unit(self.beta2) {
            return Err(DdaError::InvalidInput(format!(
                "betas must lie in [0, 1), got {} and {}",
                self.beta1, self.beta2
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig<T> {
    pub optimizer: AdamW<T>,
    pub epochs: usize,
    /// Groups per mini-batch: whole images for image data, single samples
    /// for point data.
    pub batch_size: usize,
    pub seed: u64,
    /// Epochs without improvement in the monitored loss before stopping.
    pub patience: usize,
    pub objective: Objective<T>,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            optimizer: AdamW::default(),
            epochs: 100,
            batch_size: 8,
            seed: 0,
            patience: 20,
            objective: Objective::Dda {
                variant: BinaryVariant::EigenNormalized,
                eps: T::lit(1e-8),
            },
        }
    }
}

/// Labelled rows split into groups. A mini-batch is a set of whole groups
/// whose rows are pooled before the loss is computed.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainData<T> {
    groups: Vec<(Matrix<T>, Vec<usize>)>,
    pooled: Matrix<T>,
    labels: Vec<usize>,
}

impl<T: Scalar> TrainData<T> {
    pub fn new(groups: Vec<(Matrix<T>, Vec<usize>)>) -> Result<Self> {
        let first = groups
            .first()
            .ok_or_else(|| DdaError::InvalidInput("no training data".into()))?;
        let dim = first.0.cols();
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for (i, (x, l)) in groups.iter().enumerate() {
            if x.cols() != dim || x.rows() != l.len() {
                return Err(DdaError::DimensionMismatch(format!(
                    "group {i}: {}x{} features with {} labels, expected {dim} columns",
                    x.rows(),
                    x.cols(),
                    l.len()
                )));
            }
            data.extend_from_slice(x.as_slice());
            labels.extend_from_slice(l);
        }
        if labels.is_empty() {
            return Err(DdaError::InvalidInput("no training rows".into()));
        }
        let pooled = Matrix::from_vec(labels.len(), dim, data)?;
        Ok(Self {
            groups,
            pooled,
            labels,
        })
    }

    /// One group per sample.
    pub fn from_samples(s: &SampleSet<T>) -> Result<Self> {
        Self::new(
            s.features()
                .iter()
                .zip(s.labels())
                .map(|(x, &l)| (Matrix::from_rows(&[x.as_slice()]), vec![l]))
                .collect(),
        )
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn dim(&self) -> usize {
        self.pooled.cols()
    }

    /// All rows stacked in group order.
    pub fn features(&self) -> &Matrix<T> {
        &self.pooled
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    fn batch(&self, idx: &[usize]) -> (Matrix<T>, Vec<usize>) {
        let rows: usize = idx.iter().map(|&i| self.groups[i].1.len()).sum();
        let mut data = Vec::with_capacity(rows * self.dim());
        let mut labels = Vec::with_capacity(rows);
        for &i in idx {
            data.extend_from_slice(self.groups[i].0.as_slice());
            labels.extend_from_slice(&self.groups[i].1);
        }
        (
            Matrix::from_vec(rows, self.dim(), data).expect("rows checked on construction"),
            labels,
        )
    }
}

/// Objective value of the network on a whole dataset, pooled.
pub fn dataset_loss<T: Scalar>(
    net: &NetState<T>,
    data: &TrainData<T>,
    objective: &Objective<T>,
) -> Result<T> {
    Ok(objective
        .evaluate(&net.predict(data.features())?, data.labels())?
        .value)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord<T> {
    pub epoch: usize,
    pub train_loss: T,
    pub val_loss: Option<T>,
    pub skipped_batches: usize,
}

impl<T: Scalar> EpochRecord<T> {
    /// Loss used for model selection: validation when available.
    pub fn monitored(&self) -> T {
        self.val_loss.unwrap_or(self.train_loss)
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    /// State at the epoch with the lowest monitored loss.
    pub net: NetState<T>,
    /// Entry 0 is the untrained network; entry `k` follows epoch `k`.
    pub trace: Vec<EpochRecord<T>>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl<T: Scalar> TrainOutcome<T> {
    pub fn best(&self) -> &EpochRecord<T> {
        &self.trace[self.best_epoch]
    }
}

/// Mini-batch AdamW training with early stopping on the monitored loss.
/// Group order is reshuffled every epoch from ChaCha stream 1 of
/// `cfg.seed`. Batches a loss cannot use (a DDA batch holding one class)
/// are skipped. A binary DDA model is returned oriented so that class 1
/// scores high on the training data, unless no epoch improved on the initial
/// state, which is returned unchanged.
pub fn train<T: Scalar>(
    mut net: NetState<T>,
    data: &TrainData<T>,
    validation: Option<&TrainData<T>>,
    cfg: &TrainConfig<T>,
) -> Result<TrainOutcome<T>> {
    cfg.optimizer.validate()?;
    if cfg.batch_size == 0 {
        return Err(DdaError::InvalidInput("batch_size must be positive".into()));
    }
    if data.dim() != net.input_dim() || validation.is_some_and(|v| v.dim() != net.input_dim()) {
        return Err(DdaError::DimensionMismatch(format!(
            "data has {} features, network expects {}",
            data.dim(),
            net.input_dim()
        )));
    }
    let record = |net: &NetState<T>, epoch: usize, skipped: usize| -> Result<EpochRecord<T>> {
        Ok(EpochRecord {
            epoch,
            train_loss: dataset_loss(net, data, &cfg.objective)?,
            val_loss: validation
                .map(|v| dataset_loss(net, v, &cfg.objective))
                .transpose()?,
            skipped_batches: skipped,
        })
    };
    let mut trace = vec![record(&net, 0, 0)?];
    let mut best = net.clone();
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut stopped_early = false;
    let mut order: Vec<usize> = (0..data.group_count()).collect();
    let mut shuffle = stream_rng(cfg.seed, 1);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle);
        let mut skipped = 0;
        for idx in order.chunks(cfg.batch_size) {
            let (x, labels) = data.batch(idx);
            let (scores, cache) = net.forward(&x)?;
            let eval = cfg.objective.evaluate(&scores, &labels)?;
            if eval.skipped {
                skipped += 1;
                continue;
            }
            let upstream = Matrix::from_vec(scores.rows(), scores.cols(), eval.grads)?;
            let grads = net.backward(&cache, &upstream)?;
            net.adamw_step(&grads, &cfg.optimizer)?;
        }
        if net.step() == 0 {
            return Err(DdaError::AllBatchesSkipped);
        }
        let rec = record(&net, epoch, skipped)?;
        if rec.monitored() < trace[best_epoch].monitored() {
            best = net.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
        }
        trace.push(rec);
        if stale >= cfg.patience {
            stopped_early = epoch < cfg.epochs;
            break;
        }
    }
    // an untrained state is handed back exactly as it came in
    if best_epoch > 0 && matches!(cfg.objective, Objective::Dda { .. }) {
        best.orient_to_labels(data.features(), data.labels())?;
    }
    Ok(TrainOutcome {
        net: best,
        trace,
        best_epoch,
        stopped_early,
    })
}
