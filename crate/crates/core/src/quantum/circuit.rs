use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::state::{Axis, QuantumOutput, StateVector};
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// Shape of the variational layer: angle embedding on `n_qubits` wires
/// followed by `n_layers` strongly-entangling layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CircuitConfig {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub embedding_axis: Axis,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        Self {
            n_qubits: 6,
            n_layers: 4,
            embedding_axis: Axis::Y,
        }
    }
}

impl CircuitConfig {
    pub fn new(n_qubits: usize, n_layers: usize, embedding_axis: Axis) -> Result<Self> {
        let cfg = Self {
            n_qubits,
            n_layers,
            embedding_axis,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > super::state::MAX_QUBITS {
            return Err(Error::Parameter(format!(
                "n_qubits must be in 1..={}, got {}",
                super::state::MAX_QUBITS,
                self.n_qubits
            )));
        }
        if self.n_layers == 0 {
            return Err(Error::Parameter("n_layers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        self.n_layers * self.n_qubits * 3
    }

    /// CNOT range for layer `l`; `None` when there is a single qubit.
    pub fn entangler_range(&self, layer: usize) -> Option<usize> {
        (self.n_qubits > 1).then(|| layer % (self.n_qubits - 1) + 1)
    }
}

/// Variational angles, shape `(n_layers, n_qubits, 3)`, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumParams {
    n_layers: usize,
    n_qubits: usize,
    theta: Vec<f64>,
}

impl QuantumParams {
    pub fn zeros(config: &CircuitConfig) -> Self {
        Self {
            n_layers: config.n_layers,
            n_qubits: config.n_qubits,
            theta: vec![0.0; config.n_params()],
        }
    }

    /// Uniform in `[0, 2π)`.
    pub fn random(config: &CircuitConfig, rng: &mut SeededRng) -> Self {
        let theta = (0..config.n_params()).map(|_| rng.uniform(0.0, TAU)).collect();
        Self {
            n_layers: config.n_layers,
            n_qubits: config.n_qubits,
            theta,
        }
    }

    pub fn from_flat(config: &CircuitConfig, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != config.n_params() {
            return Err(Error::Shape(format!(
                "theta needs {} = {}x{}x3 values, got {}",
                config.n_params(),
                config.n_layers,
                config.n_qubits,
                theta.len()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("theta".into()));
        }
        Ok(Self {
            n_layers: config.n_layers,
            n_qubits: config.n_qubits,
            theta,
        })
    }

    /// Nested `[layer][qubit][angle]` form.
    pub fn from_nested(config: &CircuitConfig, nested: &[Vec<[f64; 3]>]) -> Result<Self> {
        if nested.len() != config.n_layers || nested.iter().any(|l| l.len() != config.n_qubits) {
            return Err(Error::Shape(format!(
                "theta must be {}x{}x3",
                config.n_layers, config.n_qubits
            )));
        }
        let flat = nested.iter().flatten().flatten().copied().collect();
        Self::from_flat(config, flat)
    }

    pub fn to_nested(&self) -> Vec<Vec<[f64; 3]>> {
        self.theta
            .chunks_exact(self.n_qubits * 3)
            .map(|layer| layer.chunks_exact(3).map(|r| [r[0], r[1], r[2]]).collect())
            .collect()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_layers, self.n_qubits, 3)
    }

    pub fn index(&self, layer: usize, qubit: usize, k: usize) -> usize {
        (layer * self.n_qubits + qubit) * 3 + k
    }

    pub fn get(&self, layer: usize, qubit: usize, k: usize) -> f64 {
        self.theta[self.index(layer, qubit, k)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn check(&self, config: &CircuitConfig) -> Result<()> {
        if self.n_layers != config.n_layers || self.n_qubits != config.n_qubits {
            return Err(Error::Shape(format!(
                "theta shape ({}, {}, 3) does not match circuit ({}, {}, 3)",
                self.n_layers, self.n_qubits, config.n_layers, config.n_qubits
            )));
        }
        Ok(())
    }
}

/// Where a rotation gate reads its angle from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot {
    Feature(usize),
    Theta(usize),
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Op {
    Rotation { qubit: usize, axis: Axis, slot: Slot },
    Cnot { control: usize, target: usize },
}

/// Flattened gate list for one circuit shape: embedding rotations first,
/// then each entangling layer.
#[derive(Debug, Clone)]
pub struct Circuit {
    config: CircuitConfig,
    pub(crate) ops: Vec<Op>,
}

impl Circuit {
    pub fn new(config: CircuitConfig) -> Result<Self> {
        config.validate()?;
        let mut ops = Vec::new();
        for q in 0..config.n_qubits {
            ops.push(Op::Rotation {
                qubit: q,
                axis: config.embedding_axis,
                slot: Slot::Feature(q),
            });
        }
        let n = config.n_qubits;
        for l in 0..config.n_layers {
            for q in 0..n {
                let base = (l * n + q) * 3;
                // Rot(α, β, γ) = RZ(α)·RY(β)·RZ(γ): γ acts first
                for (k, axis) in [(2, Axis::Z), (1, Axis::Y), (0, Axis::Z)] {
                    ops.push(Op::Rotation {
                        qubit: q,
                        axis,
                        slot: Slot::Theta(base + k),
                    });
                }
            }
            if let Some(r) = config.entangler_range(l) {
                for q in 0..n {
                    ops.push(Op::Cnot {
                        control: q,
                        target: (q + r) % n,
                    });
                }
            }
        }
        Ok(Self { config, ops })
    }

    pub fn config(&self) -> &CircuitConfig {
        &self.config
    }

    pub(crate) fn check_inputs(&self, params: &QuantumParams, features: &[f64]) -> Result<()> {
        params.check(&self.config)?;
        if features.len() != self.config.n_qubits {
            return Err(Error::Shape(format!(
                "expected {} embedding features, got {}",
                self.config.n_qubits,
                features.len()
            )));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn apply_op(
        state: &mut StateVector,
        op: &Op,
        params: &QuantumParams,
        features: &[f64],
        shift: f64,
    ) {
        match *op {
            Op::Rotation { qubit, axis, slot } => {
                let angle = match slot {
                    Slot::Feature(j) => features[j],
                    Slot::Theta(i) => params.theta[i],
                } + shift;
                state
                    .apply_rotation(qubit, axis, angle)
                    .expect("gate list built for this register");
            }
            Op::Cnot { control, target } => {
                state
                    .apply_cnot(control, target)
                    .expect("gate list built for this register");
            }
        }
    }

    /// Final state for the given inputs.
    pub fn state(&self, params: &QuantumParams, features: &[f64]) -> Result<StateVector> {
        self.check_inputs(params, features)?;
        let mut state = StateVector::zero(self.config.n_qubits)?;
        for op in &self.ops {
            Self::apply_op(&mut state, op, params, features, 0.0);
        }
        Ok(state)
    }

    pub fn forward(&self, params: &QuantumParams, features: &[f64]) -> Result<QuantumOutput> {
        Ok(self.state(params, features)?.measure_z())
    }
}

/// `⊗_j R_P(φ_j)|0⟩`
pub fn angle_embed(config: &CircuitConfig, features: &[f64]) -> Result<StateVector> {
    config.validate()?;
    if features.len() != config.n_qubits {
        return Err(Error::Shape(format!(
            "expected {} embedding features, got {}",
            config.n_qubits,
            features.len()
        )));
    }
    let mut state = StateVector::zero(config.n_qubits)?;
    for (q, &phi) in features.iter().enumerate() {
        state.apply_rotation(q, config.embedding_axis, phi)?;
    }
    Ok(state)
}

/// Applies every strongly-entangling layer to `state`.
pub fn strongly_entangling(mut state: StateVector, params: &QuantumParams) -> Result<StateVector> {
    let (n_layers, n_qubits, _) = params.shape();
    if state.n_qubits() != n_qubits {
        return Err(Error::Shape(format!(
            "theta is for {n_qubits} qubits, state has {}",
            state.n_qubits()
        )));
    }
    let config = CircuitConfig {
        n_qubits,
        n_layers,
        embedding_axis: Axis::Y,
    };
    for l in 0..n_layers {
        for q in 0..n_qubits {
            state.apply_rotation(q, Axis::Z, params.get(l, q, 2))?;
            state.apply_rotation(q, Axis::Y, params.get(l, q, 1))?;
            state.apply_rotation(q, Axis::Z, params.get(l, q, 0))?;
        }
        if let Some(r) = config.entangler_range(l) {
            for q in 0..n_qubits {
                state.apply_cnot(q, (q + r) % n_qubits)?;
            }
        }
    }
    Ok(state)
}

/// Embedding, entangling layers, then Pauli-Z readout.
pub fn qnn_forward(
    config: &CircuitConfig,
    params: &QuantumParams,
    features: &[f64],
) -> Result<QuantumOutput> {
    params.check(config)?;
    let state = angle_embed(config, features)?;
    Ok(strongly_entangling(state, params)?.measure_z())
}
