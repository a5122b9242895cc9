//! Versioned JSON checkpoints.
//!
//! ```json
//! {
//!   "format": "iqnncs-checkpoint",
//!   "version": 1,
//!   "circuit": {"n_qubits": 6, "n_layers": 4, "embedding_axis": "Y"},
//!   "dropout": 0.2,
//!   "pre_layers": [{"weights": [[...], ...], "bias": [...]}],
//!   "theta": [[[a, b, c], ...], ...],
//!   "post_layers": [...],
//!   "class_names": ["Low", "Average", "High"],
//!   "preprocessing_hash": "<sha256 hex>"
//! }
//! ```
//! Weights are `out × in` row arrays. Pre-net layers are each followed by
//! ReLU; post-net layers are joined by ReLU and dropout.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HybridModel;
use crate::error::{Error, Result};
use crate::nn::DenseLayer;
use crate::numerics::Matrix;
use crate::quantum::{CircuitConfig, QuantumParams};

pub const CHECKPOINT_FORMAT: &str = "iqnncs-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    format: String,
    version: u32,
    circuit: CircuitConfig,
    dropout: f64,
    pre_layers: Vec<LayerDoc>,
    theta: Vec<Vec<[f64; 3]>>,
    post_layers: Vec<LayerDoc>,
    #[serde(default)]
    pub class_names: Vec<String>,
    #[serde(default)]
    pub preprocessing_hash: Option<String>,
}

fn layer_doc(d: &DenseLayer) -> LayerDoc {
    LayerDoc {
        weights: d.weights.to_rows(),
        bias: d.bias.clone(),
    }
}

fn layer_from_doc(doc: &LayerDoc) -> Result<DenseLayer> {
    DenseLayer::new(Matrix::from_rows(&doc.weights)?, doc.bias.clone())
}

impl Checkpoint {
    pub fn from_model(
        model: &HybridModel,
        class_names: Vec<String>,
        preprocessing_hash: Option<String>,
    ) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            circuit: *model.circuit_config(),
            dropout: model.dropout(),
            pre_layers: model.pre_layers().map(layer_doc).collect(),
            theta: model.qparams().to_nested(),
            post_layers: model.post_layers().map(layer_doc).collect(),
            class_names,
            preprocessing_hash,
        }
    }

    pub fn to_model(&self) -> Result<HybridModel> {
        let schema = |e: Error| Error::Schema(format!("checkpoint parameters: {e}"));
        let pre = self.pre_layers.iter().map(layer_from_doc).collect::<Result<_>>().map_err(schema)?;
        let post = self.post_layers.iter().map(layer_from_doc).collect::<Result<_>>().map_err(schema)?;
        let q = QuantumParams::from_nested(&self.circuit, &self.theta).map_err(schema)?;
        let model = HybridModel::from_parts(pre, self.circuit, q, post, self.dropout).map_err(schema)?;
        if !self.class_names.is_empty() && self.class_names.len() != model.n_classes() {
            return Err(Error::Schema(format!(
                "checkpoint lists {} class names for {} outputs",
                self.class_names.len(),
                model.n_classes()
            )));
        }
        Ok(model)
    }

    /// Loads the model and checks it against the data it will be used on.
    pub fn to_model_for(&self, input_dim: usize, n_classes: usize) -> Result<HybridModel> {
        let model = self.to_model()?;
        if model.n_classes() != n_classes {
            return Err(Error::Incompatible(format!(
                "checkpoint predicts {} classes, data has {n_classes}",
                model.n_classes()
            )));
        }
        if model.input_dim() != input_dim {
            return Err(Error::Incompatible(format!(
                "checkpoint expects {} input features, data has {input_dim}",
                model.input_dim()
            )));
        }
        Ok(model)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        if doc.format != CHECKPOINT_FORMAT {
            return Err(Error::Schema(format!(
                "{}: not a checkpoint (format {:?})",
                path.display(),
                doc.format
            )));
        }
        if doc.version != CHECKPOINT_VERSION {
            return Err(Error::Schema(format!(
                "{}: checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                path.display(),
                doc.version
            )));
        }
        Ok(doc)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

pub fn save_checkpoint(
    model: &HybridModel,
    path: &Path,
    class_names: Vec<String>,
    preprocessing_hash: Option<String>,
) -> Result<()> {
    Checkpoint::from_model(model, class_names, preprocessing_hash).write(path)
}

pub fn load_checkpoint(path: &Path) -> Result<HybridModel> {
    Checkpoint::read(path)?.to_model()
}
