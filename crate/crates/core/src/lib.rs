//! Hybrid classical/quantum classifier for tabular credit data.
//!
//! The quantum layer is simulated exactly on a statevector. Training uses
//! parameter-shift gradients for the circuit and reverse-mode backprop for
//! the classical layers. The [`interpret`] module provides post-hoc
//! attribution tools, including the inter-class attribution alignment
//! (ICAA) matrix.

pub mod data;
pub mod error;
pub mod interpret;
pub mod model;
pub mod nn;
pub mod numerics;
pub mod quantum;
pub mod report;

pub use error::{Error, Result};
