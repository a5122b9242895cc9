use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{attribute, check_input, AttributionMethod, AttributionVector, Explainable};
use crate::error::{Error, Result};
use crate::numerics::cosine_similarity;

/// Pairwise cosine similarities. `None` marks a pair involving a zero vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineMatrix {
    pub values: Vec<Vec<Option<f64>>>,
}

impl CosineMatrix {
    /// Symmetric by construction: only the upper triangle is computed.
    pub fn from_vectors(vectors: &[Vec<f64>]) -> Self {
        let n = vectors.len();
        let mut values = vec![vec![None; n]; n];
        for i in 0..n {
            for j in i..n {
                let s = if i == j {
                    cosine_similarity(&vectors[i], &vectors[i]).map(|_| 1.0)
                } else {
                    cosine_similarity(&vectors[i], &vectors[j]).map(|s| s.clamp(-1.0, 1.0))
                };
                values[i][j] = s;
                values[j][i] = s;
            }
        }
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    /// Mean of the defined off-diagonal entries.
    pub fn mean_off_diagonal(&self) -> Option<f64> {
        let vals: Vec<f64> = (0..self.len())
            .flat_map(|i| (0..self.len()).filter(move |&j| j != i).map(move |j| (i, j)))
            .filter_map(|(i, j)| self.values[i][j])
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// Per-instance ICAA result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcaaReport {
    pub instance: Option<usize>,
    pub method: String,
    pub class_names: Vec<String>,
    pub matrix: CosineMatrix,
    pub attributions: Vec<AttributionVector>,
}

/// Cosine similarity between the attribution vectors of every class pair at
/// one instance. Pass `AttributionMethod::Gradient` for the signed default.
pub fn icaa<M: Explainable + ?Sized>(model: &M, x: &[f64], method: &AttributionMethod) -> Result<IcaaReport> {
    check_input(model, x)?;
    let attributions = (0..model.n_classes())
        .into_par_iter()
        .map(|c| attribute(model, x, c, method))
        .collect::<Result<Vec<_>>>()?;
    let vectors: Vec<Vec<f64>> = attributions.iter().map(|a| a.scores.clone()).collect();
    Ok(IcaaReport {
        instance: None,
        method: method.tag().into(),
        class_names: (0..model.n_classes()).map(|c| c.to_string()).collect(),
        matrix: CosineMatrix::from_vectors(&vectors),
        attributions,
    })
}

/// Which class each sample's attribution targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassTarget {
    Predicted,
    Fixed(usize),
}

/// Cosine similarity between the attributions of every pair of samples.
pub fn attribution_similarity_matrix<M: Explainable + ?Sized>(
    model: &M,
    samples: &[Vec<f64>],
    method: &AttributionMethod,
    target: ClassTarget,
) -> Result<CosineMatrix> {
    if samples.is_empty() {
        return Err(Error::Data("no samples for attribution similarity".into()));
    }
    let vectors = samples
        .par_iter()
        .map(|x| {
            let class = match target {
                ClassTarget::Predicted => model.predict(x)?,
                ClassTarget::Fixed(c) => c,
            };
            Ok(attribute(model, x, class, method)?.scores)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CosineMatrix::from_vectors(&vectors))
}
