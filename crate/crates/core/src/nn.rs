//! Dense feed-forward layers, class-weighted softmax NLL, AdamW and
//! learning-rate schedules.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, SeededRng};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out × in`
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Gradient of a [`DenseLayer`], same shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::Shape(format!(
                "bias has {} entries for {} outputs",
                bias.len(),
                weights.rows()
            )));
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("bias".into()));
        }
        Ok(Self { weights, bias })
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weights: Matrix::zeros(out_dim, in_dim),
            bias: vec![0.0; out_dim],
        }
    }

    /// Glorot-uniform weights in `±√(6/(fan_in+fan_out))`, zero bias.
    pub fn glorot(in_dim: usize, out_dim: usize, rng: &mut SeededRng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let data = (0..in_dim * out_dim)
            .map(|_| rng.uniform(-limit, limit))
            .collect();
        Self {
            weights: Matrix::new(out_dim, in_dim, data).expect("sized above"),
            bias: vec![0.0; out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn n_params(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.weights.matvec(input)?;
        for (o, b) in out.iter_mut().zip(&self.bias) {
            *o += b;
        }
        Ok(out)
    }

    /// Returns parameter gradients and the gradient with respect to `input`.
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<(DenseGrad, Vec<f64>)> {
        if input.len() != self.in_dim() || upstream.len() != self.out_dim() {
            return Err(Error::Shape(format!(
                "dense backward: layer {}->{}, input {}, upstream {}",
                self.in_dim(),
                self.out_dim(),
                input.len(),
                upstream.len()
            )));
        }
        let mut gw = Matrix::zeros(self.out_dim(), self.in_dim());
        for (i, &u) in upstream.iter().enumerate() {
            for (g, &x) in gw.row_mut(i).iter_mut().zip(input) {
                *g = u * x;
            }
        }
        let grad_input = self.weights.transpose_matvec(upstream)?;
        Ok((
            DenseGrad {
                weights: gw,
                bias: upstream.to_vec(),
            },
            grad_input,
        ))
    }
}

pub fn dense_forward(layer: &DenseLayer, input: &[f64]) -> Result<Vec<f64>> {
    layer.forward(input)
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Numerically stable softmax (max subtracted before exponentiation).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Per-class loss weights, all strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights(Vec<f64>);

impl ClassWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Parameter(format!(
                "class weights must be positive and finite, got {weights:?}"
            )));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n_classes: usize) -> Self {
        Self(vec![1.0; n_classes])
    }

    /// `n_samples / (C · n_c)`; classes absent from `labels` get weight 1.
    pub fn inverse_frequency(labels: &[usize], n_classes: usize) -> Self {
        let mut counts = vec![0usize; n_classes];
        for &l in labels {
            counts[l] += 1;
        }
        let n = labels.len() as f64;
        Self(
            counts
                .iter()
                .map(|&c| {
                    if c == 0 {
                        1.0
                    } else {
                        n / (n_classes as f64 * c as f64)
                    }
                })
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Weighted NLL of the softmax of `logits` and its gradient with respect to
/// the logits: `loss = −w_t·ln ŷ_t`, `grad = w_t·(ŷ − e_t)`.
pub fn softmax_nll(logits: &[f64], target: usize, weights: &ClassWeights) -> Result<(f64, Vec<f64>)> {
    let c = logits.len();
    if c < 2 {
        return Err(Error::Shape(format!("need at least 2 logits, got {c}")));
    }
    if weights.len() != c {
        return Err(Error::Shape(format!(
            "{} class weights for {c} logits",
            weights.len()
        )));
    }
    if target >= c {
        return Err(Error::Index(format!("target class {target} out of range for {c} classes")));
    }
    let w = weights.0[target];
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    let loss = -w * (logits[target] - max - log_sum);
    let mut grad = softmax(logits);
    grad[target] -= 1.0;
    grad.iter_mut().for_each(|g| *g *= w);
    Ok((loss, grad))
}

/// Inverted dropout. Returns the output and the per-entry multiplier that
/// was applied (`0` or `1/(1−p)`; all ones outside training).
pub fn dropout(
    input: &[f64],
    rate: f64,
    rng: Option<&mut SeededRng>,
    training: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Parameter(format!("dropout rate must be in [0, 1), got {rate}")));
    }
    if !training || rate == 0.0 {
        return Ok((input.to_vec(), vec![1.0; input.len()]));
    }
    let rng = rng.ok_or_else(|| Error::Parameter("training-mode dropout needs an rng".into()))?;
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = input
        .iter()
        .map(|_| if rng.next_f64() < rate { 0.0 } else { keep })
        .collect();
    let out = input.iter().zip(&mask).map(|(x, m)| x * m).collect();
    Ok((out, mask))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(DenseLayer),
    Relu,
    Dropout(f64),
}

/// A stack of layers with cached reverse-mode differentiation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedForward {
    layers: Vec<Layer>,
}

/// Activations recorded by [`FeedForward::forward`].
#[derive(Debug, Clone)]
pub struct FeedForwardCache {
    /// Input to each layer.
    inputs: Vec<Vec<f64>>,
    /// Dropout multipliers, one entry per layer (`None` for non-dropout layers).
    masks: Vec<Option<Vec<f64>>>,
}

impl FeedForward {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let mut width: Option<usize> = None;
        for (i, l) in layers.iter().enumerate() {
            match l {
                Layer::Dense(d) => {
                    if let Some(w) = width {
                        if w != d.in_dim() {
                            return Err(Error::Shape(format!(
                                "layer {i} expects {} inputs, previous layer gives {w}",
                                d.in_dim()
                            )));
                        }
                    }
                    width = Some(d.out_dim());
                }
                Layer::Dropout(p) if !(0.0..1.0).contains(p) => {
                    return Err(Error::Parameter(format!("dropout rate {p} not in [0, 1)")));
                }
                _ => {}
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn dense_layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Dense(d) => Some(d),
            _ => None,
        })
    }

    pub fn dense_layers_mut(&mut self) -> impl Iterator<Item = &mut DenseLayer> {
        self.layers.iter_mut().filter_map(|l| match l {
            Layer::Dense(d) => Some(d),
            _ => None,
        })
    }

    pub fn in_dim(&self) -> Option<usize> {
        self.dense_layers().next().map(DenseLayer::in_dim)
    }

    pub fn out_dim(&self) -> Option<usize> {
        self.dense_layers().last().map(DenseLayer::out_dim)
    }

    pub fn dropout_rate(&self) -> f64 {
        self.layers
            .iter()
            .find_map(|l| match l {
                Layer::Dropout(p) => Some(*p),
                _ => None,
            })
            .unwrap_or(0.0)
    }

    pub fn n_params(&self) -> usize {
        self.dense_layers().map(DenseLayer::n_params).sum()
    }

    pub fn forward(
        &self,
        input: &[f64],
        training: bool,
        mut rng: Option<&mut SeededRng>,
    ) -> Result<(Vec<f64>, FeedForwardCache)> {
        let mut cache = FeedForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            masks: Vec::with_capacity(self.layers.len()),
        };
        let mut x = input.to_vec();
        for layer in &self.layers {
            let (next, mask) = match layer {
                Layer::Dense(d) => (d.forward(&x)?, None),
                Layer::Relu => (relu(&x), None),
                Layer::Dropout(p) => {
                    let (out, mask) = dropout(&x, *p, rng.as_deref_mut(), training)?;
                    (out, Some(mask))
                }
            };
            cache.inputs.push(std::mem::replace(&mut x, next));
            cache.masks.push(mask);
        }
        Ok((x, cache))
    }

    /// Gradients for each dense layer (in order) and for the stack input.
    pub fn backward(
        &self,
        cache: &FeedForwardCache,
        upstream: &[f64],
    ) -> Result<(Vec<DenseGrad>, Vec<f64>)> {
        if cache.inputs.len() != self.layers.len() {
            return Err(Error::StaleCache(format!(
                "cache has {} layers, network has {}",
                cache.inputs.len(),
                self.layers.len()
            )));
        }
        let mut grads = Vec::new();
        let mut g = upstream.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[i];
            g = match layer {
                Layer::Dense(d) => {
                    let (dg, gi) = d.backward(input, &g)?;
                    grads.push(dg);
                    gi
                }
                Layer::Relu => input
                    .iter()
                    .zip(&g)
                    .map(|(&x, &u)| if x > 0.0 { u } else { 0.0 })
                    .collect(),
                Layer::Dropout(_) => {
                    let mask = cache.masks[i]
                        .as_ref()
                        .ok_or_else(|| Error::StaleCache("missing dropout mask".into()))?;
                    g.iter().zip(mask).map(|(u, m)| u * m).collect()
                }
            };
        }
        grads.reverse();
        Ok((grads, g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

/// AdamW optimizer state over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW {
    pub config: AdamWConfig,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamW {
    pub fn new(config: AdamWConfig, n_params: usize) -> Self {
        Self {
            config,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    /// One update with learning rate `lr`. Weight decay is applied to the
    /// parameter directly, not folded into the gradient moments.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} parameters, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        let AdamWConfig {
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        self.t += 1;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * (m_hat / (v_hat.sqrt() + eps) + weight_decay * params[i]);
        }
        Ok(())
    }
}

/// Learning-rate schedule, evaluated per epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchedulerConfig {
    /// `lr · gamma^⌊epoch/step_size⌋`
    Step { step_size: usize, gamma: f64 },
    /// `eta_min + (lr − eta_min)(1 + cos(π·epoch/t_max))/2`
    Cosine { t_max: usize, eta_min: f64 },
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig::Step {
            step_size: 10,
            gamma: 0.5,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SchedulerConfig::Step { step_size, gamma } => {
                if step_size == 0 || !(gamma > 0.0 && gamma <= 1.0) {
                    return Err(Error::Parameter(format!(
                        "StepLR needs step_size > 0 and 0 < gamma <= 1, got {step_size}, {gamma}"
                    )));
                }
            }
            SchedulerConfig::Cosine { t_max, eta_min } => {
                if t_max == 0 || !(eta_min >= 0.0) {
                    return Err(Error::Parameter(format!(
                        "cosine annealing needs t_max > 0 and eta_min >= 0, got {t_max}, {eta_min}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn lr(&self, base_lr: f64, epoch: usize) -> f64 {
        match *self {
            SchedulerConfig::Step { step_size, gamma } => {
                base_lr * gamma.powi((epoch / step_size) as i32)
            }
            SchedulerConfig::Cosine { t_max, eta_min } => {
                eta_min + (base_lr - eta_min) * (1.0 + (PI * epoch as f64 / t_max as f64).cos()) / 2.0
            }
        }
    }
}

pub fn scheduler_lr(config: &SchedulerConfig, base_lr: f64, epoch: usize) -> f64 {
    config.lr(base_lr, epoch)
}
