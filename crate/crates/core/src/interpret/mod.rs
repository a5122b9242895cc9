//! Post-hoc interpretability: gradient attributions, occlusion curves,
//! prototype matching in quantum feature space, the inter-class attribution
//! alignment (ICAA) matrix, indecision scans, prediction entropy and t-SNE
//! of quantum activations.
//!
//! Attributions target the pre-softmax logit of a class.

mod attribution;
mod entropy;
mod icaa;
mod indecision;
mod occlusion;
mod prototype;
mod tsne;

pub use attribution::{
    attribute, grad_times_input, gradient, integrated_gradients, saliency, smoothgrad,
    AttributionMethod, AttributionVector,
};
pub use entropy::{entropy, entropy_stats, EntropyStats};
pub use icaa::{attribution_similarity_matrix, icaa, ClassTarget, CosineMatrix, IcaaReport};
pub use indecision::{indecision_scan, IndecisionConfig, IndecisionReport, IndecisionRow};
pub use occlusion::{occlusion_curve, rank_features, OcclusionCurve};
pub use prototype::{prototype_match, ActivationBank, PrototypeMatch};
pub use tsne::{tsne_embed, Embedding2D, TsneConfig};

use crate::error::{Error, Result};
use crate::model::HybridModel;
use crate::nn::softmax;
use crate::numerics::Matrix;

/// A classifier that exposes logits and their input gradients.
pub trait Explainable: Sync {
    fn n_inputs(&self) -> usize;
    fn n_classes(&self) -> usize;
    fn logits(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// `∂logit_class/∂x`
    fn logit_gradient(&self, x: &[f64], class: usize) -> Result<Vec<f64>>;

    fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(crate::model::argmax(&self.logits(x)?))
    }
}

/// A model with an internal activation space to compare instances in.
pub trait ActivationSpace: Sync {
    fn activation(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl Explainable for HybridModel {
    fn n_inputs(&self) -> usize {
        self.input_dim()
    }

    fn n_classes(&self) -> usize {
        HybridModel::n_classes(self)
    }

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        HybridModel::logits(self, x)
    }

    fn logit_gradient(&self, x: &[f64], class: usize) -> Result<Vec<f64>> {
        check_class(self, class)?;
        let mut up = vec![0.0; HybridModel::n_classes(self)];
        up[class] = 1.0;
        self.input_gradient(x, &up)
    }
}

impl ActivationSpace for HybridModel {
    fn activation(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.quantum_activation(x)?.expectations)
    }
}

/// `logits = W·x + b`; useful as a closed-form reference model.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineModel {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl AffineModel {
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::Shape("bias length must equal class count".into()));
        }
        Ok(Self { weights, bias })
    }
}

impl Explainable for AffineModel {
    fn n_inputs(&self) -> usize {
        self.weights.cols()
    }

    fn n_classes(&self) -> usize {
        self.weights.rows()
    }

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.weights.matvec(x)?;
        out.iter_mut().zip(&self.bias).for_each(|(o, b)| *o += b);
        Ok(out)
    }

    fn logit_gradient(&self, x: &[f64], class: usize) -> Result<Vec<f64>> {
        check_input(self, x)?;
        check_class(self, class)?;
        Ok(self.weights.row(class).to_vec())
    }
}

impl ActivationSpace for AffineModel {
    fn activation(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.logits(x)
    }
}

pub(crate) fn check_class<M: Explainable + ?Sized>(model: &M, class: usize) -> Result<()> {
    if class >= model.n_classes() {
        return Err(Error::Index(format!(
            "class {class} out of range for {} classes",
            model.n_classes()
        )));
    }
    Ok(())
}

pub(crate) fn check_input<M: Explainable + ?Sized>(model: &M, x: &[f64]) -> Result<()> {
    if x.len() != model.n_inputs() {
        return Err(Error::Shape(format!(
            "model takes {} features, got {}",
            model.n_inputs(),
            x.len()
        )));
    }
    Ok(())
}
