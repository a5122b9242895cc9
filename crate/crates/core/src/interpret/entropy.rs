use serde::{Deserialize, Serialize};

use super::Explainable;
use crate::error::{Error, Result};

/// `−Σ p ln p`, with `0 ln 0 = 0`.
pub fn entropy(probabilities: &[f64]) -> f64 {
    -probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyStats {
    pub values: Vec<f64>,
    /// Upper bin edges over `[0, ln C]`.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub mean: f64,
}

pub fn entropy_stats<M: Explainable + ?Sized>(model: &M, samples: &[Vec<f64>], bins: usize) -> Result<EntropyStats> {
    if bins == 0 {
        return Err(Error::Parameter("histogram needs at least one bin".into()));
    }
    if samples.is_empty() {
        return Err(Error::Data("no samples for entropy statistics".into()));
    }
    let max = (model.n_classes() as f64).ln();
    let values = samples
        .iter()
        .map(|x| Ok(entropy(&model.probabilities(x)?).clamp(0.0, max)))
        .collect::<Result<Vec<_>>>()?;
    let width = max / bins as f64;
    let mut counts = vec![0; bins];
    for &h in &values {
        let b = if width > 0.0 { ((h / width) as usize).min(bins - 1) } else { 0 };
        counts[b] += 1;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(EntropyStats {
        values,
        bin_edges: (1..=bins).map(|b| b as f64 * width).collect(),
        counts,
        mean,
    })
}
