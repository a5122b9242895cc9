use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{saliency, Explainable};
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndecisionConfig {
    pub n_perturb: usize,
    pub sigma: f64,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for IndecisionConfig {
    fn default() -> Self {
        Self {
            n_perturb: 20,
            sigma: 0.1,
            threshold: 0.2,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndecisionRow {
    pub sample: usize,
    pub predicted: usize,
    pub std: f64,
    pub indecisive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndecisionReport {
    pub n_perturb: usize,
    pub sigma: f64,
    pub threshold: f64,
    pub rows: Vec<IndecisionRow>,
}

impl IndecisionReport {
    pub fn n_indecisive(&self) -> usize {
        self.rows.iter().filter(|r| r.indecisive).count()
    }
}

/// Saliency of the predicted class under `n_perturb` Gaussian perturbations.
/// A sample's std is the per-feature population std across perturbations,
/// averaged over features.
pub fn indecision_scan<M: Explainable + ?Sized>(
    model: &M,
    samples: &[Vec<f64>],
    cfg: &IndecisionConfig,
) -> Result<IndecisionReport> {
    if cfg.n_perturb < 2 || !(cfg.sigma >= 0.0) || !cfg.threshold.is_finite() {
        return Err(Error::Parameter(format!(
            "indecision scan needs n_perturb >= 2, sigma >= 0, finite threshold; got {}, {}, {}",
            cfg.n_perturb, cfg.sigma, cfg.threshold
        )));
    }
    let mut master = SeededRng::new(cfg.seed);
    let seeds: Vec<u64> = samples.iter().map(|_| master.next_u64()).collect();
    let rows = samples
        .par_iter()
        .zip(seeds)
        .enumerate()
        .map(|(i, (x, seed))| {
            let predicted = model.predict(x)?;
            let mut rng = SeededRng::new(seed);
            let maps = (0..cfg.n_perturb)
                .map(|_| {
                    let noisy: Vec<f64> = x.iter().map(|&v| rng.normal(v, cfg.sigma)).collect();
                    Ok(saliency(model, &noisy, predicted)?.scores)
                })
                .collect::<Result<Vec<_>>>()?;
            let std = mean_feature_std(&maps);
            Ok(IndecisionRow {
                sample: i,
                predicted,
                std,
                indecisive: std > cfg.threshold,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IndecisionReport {
        n_perturb: cfg.n_perturb,
        sigma: cfg.sigma,
        threshold: cfg.threshold,
        rows,
    })
}

fn mean_feature_std(maps: &[Vec<f64>]) -> f64 {
    let n = maps.len() as f64;
    let d = maps[0].len();
    if d == 0 {
        return 0.0;
    }
    let total: f64 = (0..d)
        .map(|j| {
            // shifted by the first map so identical maps give exactly 0
            let shift = maps[0][j];
            let mean = maps.iter().map(|m| m[j] - shift).sum::<f64>() / n;
            (maps.iter().map(|m| (m[j] - shift - mean).powi(2)).sum::<f64>() / n).sqrt()
        })
        .sum();
    total / d as f64
}
