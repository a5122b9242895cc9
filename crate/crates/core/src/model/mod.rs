//! The end-to-end hybrid model: classical pre-net → quantum layer →
//! classical post-net.

mod checkpoint;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use train::{argmax, evaluate, train, EpochRecord, Evaluation, TrainConfig, TrainingHistory};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{DenseGrad, DenseLayer, FeedForward, FeedForwardCache, Layer};
use crate::numerics::{Matrix, SeededRng};
use crate::quantum::{Circuit, CircuitConfig, QuantumOutput, QuantumParams};

/// Layer sizes of a [`HybridModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_dim: usize,
    pub n_classes: usize,
    pub circuit: CircuitConfig,
    /// Hidden widths of the post-net between the quantum readout and the logits.
    pub post_hidden: Vec<usize>,
    pub dropout: f64,
}

impl ModelSpec {
    pub fn new(input_dim: usize, n_classes: usize, circuit: CircuitConfig) -> Self {
        Self {
            input_dim,
            n_classes,
            circuit,
            post_hidden: vec![16],
            dropout: 0.2,
        }
    }
}

/// Pre-net: one `Linear(d → N_Q)` followed by ReLU per dense layer.
fn pre_net(dense: Vec<DenseLayer>) -> Result<FeedForward> {
    FeedForward::new(dense.into_iter().flat_map(|d| [Layer::Dense(d), Layer::Relu]).collect())
}

/// Post-net: dense layers joined by `ReLU → Dropout`, linear output.
fn post_net(dense: Vec<DenseLayer>, dropout: f64) -> Result<FeedForward> {
    let mut layers = Vec::new();
    for (i, d) in dense.into_iter().enumerate() {
        if i > 0 {
            layers.push(Layer::Relu);
            layers.push(Layer::Dropout(dropout));
        }
        layers.push(Layer::Dense(d));
    }
    FeedForward::new(layers)
}

#[derive(Debug, Clone)]
pub struct HybridModel {
    pre: FeedForward,
    circuit: Circuit,
    qparams: QuantumParams,
    post: FeedForward,
    dropout: f64,
    n_classes: usize,
    /// Bumped on every parameter write; caches from older generations are stale.
    generation: u64,
}

/// Intermediates of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    pre: FeedForwardCache,
    /// Embedding angles fed to the circuit (pre-net output).
    pub angles: Vec<f64>,
    /// Pauli-Z readout (post-net input).
    pub quantum: Vec<f64>,
    post: FeedForwardCache,
}

/// Gradients for every trainable parameter plus the model input.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub pre: Vec<DenseGrad>,
    pub theta: Vec<f64>,
    pub post: Vec<DenseGrad>,
    pub input: Vec<f64>,
}

impl ModelGrads {
    /// Same layout as [`HybridModel::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.pre {
            out.extend_from_slice(g.weights.as_slice());
            out.extend_from_slice(&g.bias);
        }
        out.extend_from_slice(&self.theta);
        for g in &self.post {
            out.extend_from_slice(g.weights.as_slice());
            out.extend_from_slice(&g.bias);
        }
        out
    }
}

impl HybridModel {
    /// Glorot-initialized classical layers and θ uniform in `[0, 2π)`.
    pub fn new(spec: &ModelSpec, rng: &mut SeededRng) -> Result<Self> {
        spec.circuit.validate()?;
        let nq = spec.circuit.n_qubits;
        let pre = vec![DenseLayer::glorot(spec.input_dim, nq, rng)];
        let qparams = QuantumParams::random(&spec.circuit, rng);
        let mut widths = vec![nq];
        widths.extend(&spec.post_hidden);
        widths.push(spec.n_classes);
        let post = widths
            .windows(2)
            .map(|w| DenseLayer::glorot(w[0], w[1], rng))
            .collect();
        Self::from_parts(pre, spec.circuit, qparams, post, spec.dropout)
    }

    pub fn from_parts(
        pre: Vec<DenseLayer>,
        circuit: CircuitConfig,
        qparams: QuantumParams,
        post: Vec<DenseLayer>,
        dropout: f64,
    ) -> Result<Self> {
        if pre.is_empty() || post.is_empty() {
            return Err(Error::Shape("pre-net and post-net need at least one layer".into()));
        }
        let pre = pre_net(pre)?;
        let post = post_net(post, dropout)?;
        let nq = circuit.n_qubits;
        if pre.out_dim() != Some(nq) {
            return Err(Error::Shape(format!(
                "pre-net outputs {:?} values, circuit has {nq} qubits",
                pre.out_dim()
            )));
        }
        if post.in_dim() != Some(nq) {
            return Err(Error::Shape(format!(
                "post-net takes {:?} inputs, circuit has {nq} qubits",
                post.in_dim()
            )));
        }
        let n_classes = post.out_dim().expect("non-empty");
        if n_classes < 2 {
            return Err(Error::Shape(format!("need at least 2 classes, got {n_classes}")));
        }
        let circuit = Circuit::new(circuit)?;
        if qparams.shape() != (circuit.config().n_layers, nq, 3) {
            return Err(Error::Shape(format!(
                "theta shape {:?} does not match circuit",
                qparams.shape()
            )));
        }
        Ok(Self {
            pre,
            circuit,
            qparams,
            post,
            dropout,
            n_classes,
            generation: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.pre.in_dim().expect("non-empty")
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn circuit_config(&self) -> &CircuitConfig {
        self.circuit.config()
    }

    pub fn qparams(&self) -> &QuantumParams {
        &self.qparams
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn pre_layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.pre.dense_layers()
    }

    pub fn post_layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.post.dense_layers()
    }

    pub fn n_params(&self) -> usize {
        self.pre.n_params() + self.qparams.as_slice().len() + self.post.n_params()
    }

    /// Flat parameter vector: pre-net (weights then bias per layer), θ, post-net.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for d in self.pre.dense_layers() {
            out.extend_from_slice(d.weights.as_slice());
            out.extend_from_slice(&d.bias);
        }
        out.extend_from_slice(self.qparams.as_slice());
        for d in self.post.dense_layers() {
            out.extend_from_slice(d.weights.as_slice());
            out.extend_from_slice(&d.bias);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::Shape(format!(
                "model has {} parameters, got {}",
                self.n_params(),
                flat.len()
            )));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model parameters".into()));
        }
        let mut rest = flat;
        let mut take = |dst: &mut [f64]| {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        };
        for d in self.pre.dense_layers_mut() {
            take(d.weights.as_mut_slice());
            take(&mut d.bias);
        }
        take(self.qparams.as_mut_slice());
        for d in self.post.dense_layers_mut() {
            take(d.weights.as_mut_slice());
            take(&mut d.bias);
        }
        self.generation += 1;
        Ok(())
    }

    pub fn forward(
        &self,
        input: &[f64],
        training: bool,
        mut rng: Option<&mut SeededRng>,
    ) -> Result<(Vec<f64>, ForwardCache)> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "model expects {} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        let (angles, pre) = self.pre.forward(input, training, rng.as_deref_mut())?;
        let quantum = self.circuit.forward(&self.qparams, &angles)?.expectations;
        let (logits, post) = self.post.forward(&quantum, training, rng)?;
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite("logits".into()));
        }
        Ok((
            logits,
            ForwardCache {
                generation: self.generation,
                pre,
                angles,
                quantum,
                post,
            },
        ))
    }

    /// Eval-mode logits.
    pub fn logits(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input, false, None)?.0)
    }

    /// Pauli-Z readout of the quantum layer for `input` (eval mode).
    pub fn quantum_activation(&self, input: &[f64]) -> Result<QuantumOutput> {
        let (angles, _) = self.pre.forward(input, false, None)?;
        self.circuit.forward(&self.qparams, &angles)
    }

    pub fn backward(&self, cache: &ForwardCache, grad_logits: &[f64]) -> Result<ModelGrads> {
        if cache.generation != self.generation {
            return Err(Error::StaleCache(format!(
                "cache from parameter generation {}, model is at {}",
                cache.generation, self.generation
            )));
        }
        if grad_logits.len() != self.n_classes {
            return Err(Error::Shape(format!(
                "expected {} logit gradients, got {}",
                self.n_classes,
                grad_logits.len()
            )));
        }
        let (post, grad_quantum) = self.post.backward(&cache.post, grad_logits)?;
        let (_, qgrad) = self
            .circuit
            .param_shift(&self.qparams, &cache.angles, &grad_quantum)?;
        let (pre, input) = self.pre.backward(&cache.pre, &qgrad.features)?;
        Ok(ModelGrads {
            pre,
            theta: qgrad.theta,
            post,
            input,
        })
    }

    /// Gradient of `Σ_c upstream[c]·logit_c` with respect to the input, in
    /// eval mode. Skips the θ shifts that [`backward`](Self::backward) needs.
    pub fn input_gradient(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        if upstream.len() != self.n_classes {
            return Err(Error::Shape(format!(
                "expected {} logit gradients, got {}",
                self.n_classes,
                upstream.len()
            )));
        }
        let (_, cache) = self.forward(input, false, None)?;
        let (_, grad_quantum) = self.post.backward(&cache.post, upstream)?;
        let (_, qgrad) = self
            .circuit
            .feature_shift(&self.qparams, &cache.angles, &grad_quantum)?;
        Ok(self.pre.backward(&cache.pre, &qgrad.features)?.1)
    }

    /// Sets every pre-net weight and bias to zero (test helper for constant paths).
    pub fn zero_pre_net(&mut self) {
        for d in self.pre.dense_layers_mut() {
            d.weights = Matrix::zeros(d.out_dim(), d.in_dim());
            d.bias.iter_mut().for_each(|b| *b = 0.0);
        }
        self.generation += 1;
    }
}
