//! Parameter-shift gradients for every rotation angle in the circuit.
//!
//! For a gate `exp(-iaP/2)` the expectation is a sinusoid in `a` with unit
//! frequency, so `∂⟨Z_k⟩/∂a = ½[⟨Z_k⟩(a + π/2) − ⟨Z_k⟩(a − π/2)]` exactly.
//! Embedding angles get the same treatment, which is what input attribution
//! through the quantum layer needs.

use std::f64::consts::FRAC_PI_2;

use super::circuit::{Circuit, CircuitConfig, Op, QuantumParams, Slot};
use super::state::{QuantumOutput, StateVector};
use crate::error::{Error, Result};
use crate::numerics::dot;

pub const SHIFT: f64 = FRAC_PI_2;
const COEFF: f64 = 0.5;

/// Upstream-contracted gradients of one circuit evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumGradient {
    /// Same flat layout as [`QuantumParams::as_slice`].
    pub theta: Vec<f64>,
    pub features: Vec<f64>,
}

impl Circuit {
    /// Forward output plus gradients of `Σ_k upstream[k]·⟨Z_k⟩`.
    ///
    /// Shifted evaluations reuse the state prefix before the shifted gate, so
    /// the cost is one suffix replay per shift instead of a full circuit.
    pub fn param_shift(
        &self,
        params: &QuantumParams,
        features: &[f64],
        upstream: &[f64],
    ) -> Result<(QuantumOutput, QuantumGradient)> {
        self.shift_gradients(params, features, upstream, true)
    }

    /// Gradients with respect to the embedding angles only; θ entries of the
    /// returned gradient are left at zero.
    pub fn feature_shift(
        &self,
        params: &QuantumParams,
        features: &[f64],
        upstream: &[f64],
    ) -> Result<(QuantumOutput, QuantumGradient)> {
        self.shift_gradients(params, features, upstream, false)
    }

    fn shift_gradients(
        &self,
        params: &QuantumParams,
        features: &[f64],
        upstream: &[f64],
        with_theta: bool,
    ) -> Result<(QuantumOutput, QuantumGradient)> {
        self.check_inputs(params, features)?;
        let n = self.config().n_qubits;
        if upstream.len() != n {
            return Err(Error::Shape(format!(
                "upstream gradient needs {n} entries, got {}",
                upstream.len()
            )));
        }
        let mut grad = QuantumGradient {
            theta: vec![0.0; params.as_slice().len()],
            features: vec![0.0; n],
        };
        let mut prefix = StateVector::zero(n)?;
        for (i, op) in self.ops.iter().enumerate() {
            if let Op::Rotation { slot, .. } = *op {
                if !with_theta && matches!(slot, Slot::Theta(_)) {
                    Circuit::apply_op(&mut prefix, op, params, features, 0.0);
                    continue;
                }
                let plus = self.shifted_expectation(&prefix, i, params, features, SHIFT);
                let minus = self.shifted_expectation(&prefix, i, params, features, -SHIFT);
                let d: f64 = COEFF * (dot(upstream, &plus) - dot(upstream, &minus));
                match slot {
                    Slot::Feature(j) => grad.features[j] += d,
                    Slot::Theta(t) => grad.theta[t] += d,
                }
            }
            Circuit::apply_op(&mut prefix, op, params, features, 0.0);
        }
        Ok((prefix.measure_z(), grad))
    }

    fn shifted_expectation(
        &self,
        prefix: &StateVector,
        at: usize,
        params: &QuantumParams,
        features: &[f64],
        shift: f64,
    ) -> Vec<f64> {
        let mut s = prefix.clone();
        Circuit::apply_op(&mut s, &self.ops[at], params, features, shift);
        for op in &self.ops[at + 1..] {
            Circuit::apply_op(&mut s, op, params, features, 0.0);
        }
        s.measure_z().expectations
    }
}

pub fn param_shift_grad(
    config: &CircuitConfig,
    params: &QuantumParams,
    features: &[f64],
    upstream: &[f64],
) -> Result<QuantumGradient> {
    Ok(Circuit::new(*config)?.param_shift(params, features, upstream)?.1)
}
