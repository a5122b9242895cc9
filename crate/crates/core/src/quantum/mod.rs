//! Exact statevector simulation of the variational quantum layer.
//!
//! Wire convention: qubit 0 is the most significant bit of the basis index,
//! so `|10⟩` (qubit 0 set) is basis index 2 for two qubits.

mod circuit;
mod gradient;
mod state;

pub use circuit::{angle_embed, qnn_forward, strongly_entangling, Circuit, CircuitConfig, QuantumParams};
pub use gradient::{param_shift_grad, QuantumGradient, SHIFT};
pub use state::{Axis, QuantumOutput, StateVector};
