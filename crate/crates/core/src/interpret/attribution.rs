use std::fmt;

use serde::{Deserialize, Serialize};

use super::{check_class, check_input, Explainable};
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// Attribution backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum AttributionMethod {
    /// `|∂logit/∂x|`
    Saliency,
    /// Signed `∂logit/∂x`
    Gradient,
    GradientTimesInput,
    IntegratedGradients {
        steps: usize,
        /// Zero vector when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        baseline: Option<Vec<f64>>,
    },
    SmoothGrad { samples: usize, sigma: f64, seed: u64 },
}

impl AttributionMethod {
    pub fn integrated_gradients() -> Self {
        AttributionMethod::IntegratedGradients {
            steps: 128,
            baseline: None,
        }
    }

    pub fn smoothgrad(seed: u64) -> Self {
        AttributionMethod::SmoothGrad {
            samples: 25,
            sigma: 0.1,
            seed,
        }
    }

    /// Short tag used in file names.
    pub fn tag(&self) -> &'static str {
        match self {
            AttributionMethod::Saliency => "saliency",
            AttributionMethod::Gradient => "gradient",
            AttributionMethod::GradientTimesInput => "grad_input",
            AttributionMethod::IntegratedGradients { .. } => "ig",
            AttributionMethod::SmoothGrad { .. } => "smoothgrad",
        }
    }
}

impl fmt::Display for AttributionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Relevance of each input feature for one (instance, class) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    pub instance: Option<usize>,
    pub class: usize,
    pub method: String,
    pub scores: Vec<f64>,
}

impl AttributionVector {
    fn new(class: usize, method: &str, scores: Vec<f64>) -> Result<Self> {
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("{method} attribution")));
        }
        Ok(Self {
            instance: None,
            class,
            method: method.into(),
            scores,
        })
    }

    pub fn for_instance(mut self, id: usize) -> Self {
        self.instance = Some(id);
        self
    }
}

fn raw_gradient<M: Explainable + ?Sized>(model: &M, x: &[f64], class: usize) -> Result<Vec<f64>> {
    check_input(model, x)?;
    check_class(model, class)?;
    model.logit_gradient(x, class)
}

pub fn gradient<M: Explainable + ?Sized>(model: &M, x: &[f64], class: usize) -> Result<AttributionVector> {
    AttributionVector::new(class, "gradient", raw_gradient(model, x, class)?)
}

pub fn saliency<M: Explainable + ?Sized>(model: &M, x: &[f64], class: usize) -> Result<AttributionVector> {
    let g = raw_gradient(model, x, class)?;
    AttributionVector::new(class, "saliency", g.into_iter().map(f64::abs).collect())
}

pub fn grad_times_input<M: Explainable + ?Sized>(
    model: &M,
    x: &[f64],
    class: usize,
) -> Result<AttributionVector> {
    let g = raw_gradient(model, x, class)?;
    AttributionVector::new(class, "grad_input", g.iter().zip(x).map(|(g, x)| g * x).collect())
}

/// Right-Riemann integrated gradients along the straight path from
/// `baseline` to `x` with `steps` points.
pub fn integrated_gradients<M: Explainable + ?Sized>(
    model: &M,
    x: &[f64],
    class: usize,
    baseline: &[f64],
    steps: usize,
) -> Result<AttributionVector> {
    check_input(model, x)?;
    check_class(model, class)?;
    if baseline.len() != x.len() {
        return Err(Error::Shape(format!(
            "baseline has {} features, input has {}",
            baseline.len(),
            x.len()
        )));
    }
    if steps < 8 {
        return Err(Error::Parameter(format!("integrated gradients needs >= 8 steps, got {steps}")));
    }
    let delta: Vec<f64> = x.iter().zip(baseline).map(|(a, b)| a - b).collect();
    if delta.iter().all(|&d| d == 0.0) {
        return AttributionVector::new(class, "ig", vec![0.0; x.len()]);
    }
    let mut acc = vec![0.0; x.len()];
    let mut point = vec![0.0; x.len()];
    for t in 1..=steps {
        let alpha = t as f64 / steps as f64;
        for ((p, b), d) in point.iter_mut().zip(baseline).zip(&delta) {
            *p = b + alpha * d;
        }
        let g = model.logit_gradient(&point, class)?;
        acc.iter_mut().zip(&g).for_each(|(a, g)| *a += g);
    }
    let scores = acc
        .iter()
        .zip(&delta)
        .map(|(a, d)| d * a / steps as f64)
        .collect();
    AttributionVector::new(class, "ig", scores)
}

/// Mean saliency over `samples` copies of `x` with `N(0, σ²)` noise.
pub fn smoothgrad<M: Explainable + ?Sized>(
    model: &M,
    x: &[f64],
    class: usize,
    samples: usize,
    sigma: f64,
    rng: &mut SeededRng,
) -> Result<AttributionVector> {
    check_input(model, x)?;
    check_class(model, class)?;
    if samples == 0 || !(sigma >= 0.0) {
        return Err(Error::Parameter(format!(
            "smoothgrad needs samples >= 1 and sigma >= 0, got {samples}, {sigma}"
        )));
    }
    if sigma == 0.0 {
        let plain = saliency(model, x, class)?;
        return AttributionVector::new(class, "smoothgrad", plain.scores);
    }
    let mut acc = vec![0.0; x.len()];
    for _ in 0..samples {
        let noisy: Vec<f64> = x.iter().map(|&v| rng.normal(v, sigma)).collect();
        let g = model.logit_gradient(&noisy, class)?;
        acc.iter_mut().zip(&g).for_each(|(a, g)| *a += g.abs());
    }
    let n = samples as f64;
    AttributionVector::new(class, "smoothgrad", acc.into_iter().map(|a| a / n).collect())
}

/// Dispatches on `method`.
pub fn attribute<M: Explainable + ?Sized>(
    model: &M,
    x: &[f64],
    class: usize,
    method: &AttributionMethod,
) -> Result<AttributionVector> {
    match method {
        AttributionMethod::Saliency => saliency(model, x, class),
        AttributionMethod::Gradient => gradient(model, x, class),
        AttributionMethod::GradientTimesInput => grad_times_input(model, x, class),
        AttributionMethod::IntegratedGradients { steps, baseline } => {
            let zero = vec![0.0; x.len()];
            integrated_gradients(model, x, class, baseline.as_deref().unwrap_or(&zero), *steps)
        }
        AttributionMethod::SmoothGrad {
            samples,
            sigma,
            seed,
        } => smoothgrad(model, x, class, *samples, *sigma, &mut SeededRng::new(*seed)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpret::AffineModel;
    use crate::model::{HybridModel, ModelSpec};
    use crate::numerics::Matrix;
    use crate::quantum::{Axis, CircuitConfig};

    fn hybrid(seed: u64) -> HybridModel {
        let spec = ModelSpec::new(4, 3, CircuitConfig::new(4, 2, Axis::Y).unwrap());
        HybridModel::new(&spec, &mut SeededRng::new(seed)).unwrap()
    }

    fn affine() -> AffineModel {
        AffineModel::new(
            Matrix::from_rows(&[[1.0, -2.0, 0.5], [0.0, 3.0, -1.0]]).unwrap(),
            vec![0.25, -0.5],
        )
        .unwrap()
    }

    fn fd_logit_grad<M: Explainable>(m: &M, x: &[f64], c: usize) -> Vec<f64> {
        let h = 1e-5;
        (0..x.len())
            .map(|j| {
                let mut xp = x.to_vec();
                xp[j] += h;
                let mut xm = x.to_vec();
                xm[j] -= h;
                (m.logits(&xp).unwrap()[c] - m.logits(&xm).unwrap()[c]) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn saliency_matches_finite_differences() {
        let m = hybrid(1);
        let x = [0.4, -0.3, 1.2, 0.8];
        for c in 0..3 {
            let s = saliency(&m, &x, c).unwrap();
            for (a, b) in s.scores.iter().zip(fd_logit_grad(&m, &x, c)) {
                assert!((a - b.abs()).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn dead_input_has_zero_saliency() {
        let m = hybrid(2);
        let mut pre: Vec<_> = m.pre_layers().cloned().collect();
        for r in 0..pre[0].out_dim() {
            pre[0].weights[(r, 2)] = 0.0;
        }
        let post = m.post_layers().cloned().collect();
        let m = HybridModel::from_parts(pre, *m.circuit_config(), m.qparams().clone(), post, 0.2).unwrap();
        let s = saliency(&m, &[0.5, 0.5, 9.0, 0.5], 1).unwrap();
        assert_eq!(s.scores[2], 0.0);
    }

    #[test]
    fn duplicated_features_get_equal_saliency() {
        let m = AffineModel::new(Matrix::from_rows(&[[0.7, 0.7, -0.1], [0.2, 0.2, 1.0]]).unwrap(), vec![0.0; 2]).unwrap();
        let s = saliency(&m, &[1.0, 1.0, 0.0], 0).unwrap();
        assert_eq!(s.scores[0], s.scores[1]);
    }

    #[test]
    fn invalid_class_is_index_error() {
        assert!(matches!(saliency(&hybrid(3), &[0.0; 4], 3), Err(Error::Index(_))));
        assert!(matches!(saliency(&affine(), &[0.0; 2], 0), Err(Error::Shape(_))));
    }

    #[test]
    fn grad_times_input_properties() {
        let m = hybrid(4);
        assert!(grad_times_input(&m, &[0.0; 4], 0).unwrap().scores.iter().all(|&s| s == 0.0));
        let x = [0.3, -1.1, 0.6, 2.0];
        let gi = grad_times_input(&m, &x, 2).unwrap();
        let g = gradient(&m, &x, 2).unwrap();
        let s = saliency(&m, &x, 2).unwrap();
        for j in 0..4 {
            assert_eq!(gi.scores[j], g.scores[j] * x[j]);
            assert!((gi.scores[j].abs() - s.scores[j] * x[j].abs()).abs() < 1e-15);
        }
        // linear model: Σ grad·x = logit − bias
        let a = affine();
        let x = [1.5, -0.5, 2.0];
        let total: f64 = grad_times_input(&a, &x, 1).unwrap().scores.iter().sum();
        assert!((total - (a.logits(&x).unwrap()[1] - a.bias[1])).abs() < 1e-12);
    }

    #[test]
    fn integrated_gradients_properties() {
        let m = hybrid(5);
        let x = [0.9, -0.4, 0.2, 1.1];
        let ig = integrated_gradients(&m, &x, 1, &x, 16).unwrap();
        assert!(ig.scores.iter().all(|&s| s == 0.0));
        assert!(matches!(integrated_gradients(&m, &x, 1, &[0.0; 4], 4), Err(Error::Parameter(_))));
        assert!(matches!(integrated_gradients(&m, &x, 1, &[0.0; 3], 16), Err(Error::Shape(_))));

        let zero = [0.0; 4];
        let ig = integrated_gradients(&m, &x, 1, &zero, 128).unwrap();
        let total: f64 = ig.scores.iter().sum();
        let diff = m.logits(&x).unwrap()[1] - m.logits(&zero).unwrap()[1];
        assert!((total - diff).abs() <= 0.02 * diff.abs().max(1e-3), "{total} vs {diff}");

        let a = affine();
        let x = [1.0, 2.0, -1.0];
        let b = [0.5, -0.5, 0.0];
        let ig = integrated_gradients(&a, &x, 0, &b, 8).unwrap();
        for j in 0..3 {
            assert!((ig.scores[j] - a.weights[(0, j)] * (x[j] - b[j])).abs() < 1e-14);
        }
    }

    #[test]
    fn smoothgrad_properties() {
        let m = hybrid(6);
        let x = [0.1, 0.2, 0.3, 0.4];
        let plain = saliency(&m, &x, 0).unwrap();
        let sg = smoothgrad(&m, &x, 0, 5, 0.0, &mut SeededRng::new(1)).unwrap();
        assert_eq!(plain.scores, sg.scores);
        let a = smoothgrad(&m, &x, 0, 5, 0.2, &mut SeededRng::new(2)).unwrap();
        let b = smoothgrad(&m, &x, 0, 5, 0.2, &mut SeededRng::new(2)).unwrap();
        assert_eq!(a, b);
        let lin = affine();
        let sg = smoothgrad(&lin, &[1.0, 1.0, 1.0], 1, 2000, 1.0, &mut SeededRng::new(3)).unwrap();
        for j in 0..3 {
            assert!((sg.scores[j] - lin.weights[(1, j)].abs()).abs() < 1e-3);
        }
    }

    #[test]
    fn dispatch_matches_direct_calls() {
        let m = hybrid(7);
        let x = [0.5, -0.5, 0.25, 1.0];
        assert_eq!(attribute(&m, &x, 0, &AttributionMethod::Saliency).unwrap(), saliency(&m, &x, 0).unwrap());
        let ig = attribute(&m, &x, 0, &AttributionMethod::integrated_gradients()).unwrap();
        assert_eq!(ig, integrated_gradients(&m, &x, 0, &[0.0; 4], 128).unwrap());
        assert_eq!(AttributionMethod::smoothgrad(1).tag(), "smoothgrad");
    }
}
