use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding2D {
    pub coords: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
    /// Perplexity actually used.
    pub perplexity: f64,
    /// KL(P‖Q) after each iteration, against the unexaggerated P.
    pub kl_history: Vec<f64>,
}

impl Embedding2D {
    /// Fraction of points whose nearest other point shares their label.
    pub fn knn_agreement(&self) -> f64 {
        let n = self.coords.len();
        if n < 2 {
            return 1.0;
        }
        let hits = (0..n)
            .filter(|&i| {
                let nn = (0..n)
                    .filter(|&j| j != i)
                    .min_by(|&a, &b| sq(&self.coords[i], &self.coords[a]).total_cmp(&sq(&self.coords[i], &self.coords[b])))
                    .unwrap();
                self.labels[nn] == self.labels[i]
            })
            .count();
        hits as f64 / n as f64
    }
}

fn sq(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Exact t-SNE to two dimensions.
pub fn tsne_embed(points: &[Vec<f64>], labels: &[usize], cfg: &TsneConfig) -> Result<Embedding2D> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Data(format!("t-SNE needs at least 2 points, got {n}")));
    }
    if labels.len() != n {
        return Err(Error::Shape(format!("{n} points but {} labels", labels.len())));
    }
    if !(cfg.perplexity >= 1.0) || cfg.iterations == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::Parameter("t-SNE needs perplexity >= 1, iterations >= 1, learning rate > 0".into()));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::Shape("t-SNE points have unequal widths".into()));
    }
    if points.iter().all(|p| p == &points[0]) {
        return Err(Error::Degenerate("all t-SNE inputs are identical".into()));
    }
    let mut perplexity = cfg.perplexity;
    if (n as f64) < 3.0 * perplexity {
        perplexity = ((n - 1) as f64 / 3.0).max(1.0);
        warn!("perplexity {} too large for {n} points, using {perplexity:.3}", cfg.perplexity);
    }

    let dist: Vec<f64> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum()
        })
        .collect();
    let p = joint_probabilities(&dist, n, perplexity);

    let mut rng = SeededRng::new(cfg.seed);
    let mut y: Vec<f64> = (0..2 * n).map(|_| rng.normal(0.0, 1e-2)).collect();
    let mut update = vec![0.0; 2 * n];
    let mut gains = vec![1.0f64; 2 * n];
    let mut grad = vec![0.0; 2 * n];
    let mut num = vec![0.0; n * n];
    let mut kl_history = Vec::with_capacity(cfg.iterations);

    for it in 0..cfg.iterations {
        let exaggeration = if it < cfg.exaggeration_iters { cfg.early_exaggeration } else { 1.0 };
        let momentum = if it < cfg.exaggeration_iters { 0.5 } else { 0.8 };
        let z = student_t(&y, n, &mut num);
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = num[i * n + j];
                let coeff = 4.0 * (exaggeration * p[i * n + j] - w / z) * w;
                grad[2 * i] += coeff * (y[2 * i] - y[2 * j]);
                grad[2 * i + 1] += coeff * (y[2 * i + 1] - y[2 * j + 1]);
            }
        }
        for k in 0..2 * n {
            gains[k] = if (grad[k] > 0.0) != (update[k] > 0.0) {
                gains[k] + 0.2
            } else {
                (gains[k] * 0.8).max(0.01)
            };
            update[k] = momentum * update[k] - cfg.learning_rate * gains[k] * grad[k];
            y[k] += update[k];
        }
        for axis in 0..2 {
            let mean = (0..n).map(|i| y[2 * i + axis]).sum::<f64>() / n as f64;
            (0..n).for_each(|i| y[2 * i + axis] -= mean);
        }
        let z = student_t(&y, n, &mut num);
        let kl: f64 = (0..n * n)
            .filter(|&k| k / n != k % n && p[k] > 0.0)
            .map(|k| p[k] * (p[k] / (num[k] / z).max(1e-300)).ln())
            .sum();
        kl_history.push(kl);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("t-SNE embedding diverged".into()));
    }
    Ok(Embedding2D {
        coords: (0..n).map(|i| [y[2 * i], y[2 * i + 1]]).collect(),
        labels: labels.to_vec(),
        perplexity,
        kl_history,
    })
}

/// Fills `num` with `1/(1+‖y_i−y_j‖²)` (zero diagonal) and returns its sum.
fn student_t(y: &[f64], n: usize, num: &mut [f64]) -> f64 {
    let mut z = 0.0;
    for i in 0..n {
        num[i * n + i] = 0.0;
        for j in i + 1..n {
            let d = (y[2 * i] - y[2 * j]).powi(2) + (y[2 * i + 1] - y[2 * j + 1]).powi(2);
            let w = 1.0 / (1.0 + d);
            num[i * n + j] = w;
            num[j * n + i] = w;
            z += 2.0 * w;
        }
    }
    z
}

/// Symmetrized joint probabilities with per-point bandwidths found by
/// bisection on the conditional entropy.
fn joint_probabilities(dist: &[f64], n: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let mut cond = vec![0.0; n * n];
    let mut row = vec![0.0; n];
    for i in 0..n {
        let d = &dist[i * n..(i + 1) * n];
        let (mut beta, mut lo, mut hi) = (1.0, 0.0, f64::INFINITY);
        for _ in 0..200 {
            let h = conditional_row(d, i, beta, &mut row);
            if (h - target).abs() < 1e-10 {
                break;
            }
            if h > target {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
        conditional_row(d, i, beta, &mut row);
        cond[i * n..(i + 1) * n].copy_from_slice(&row);
    }
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64)).max(1e-12);
            }
        }
    }
    p
}

/// Writes the conditional distribution of row `i` at precision `beta` and
/// returns its entropy in nats.
fn conditional_row(d: &[f64], i: usize, beta: f64, row: &mut [f64]) -> f64 {
    let min = d
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for (j, r) in row.iter_mut().enumerate() {
        *r = if j == i { 0.0 } else { (-(d[j] - min) * beta).exp() };
        sum += *r;
    }
    let mut h = 0.0;
    for (j, r) in row.iter_mut().enumerate() {
        *r /= sum;
        if j != i && *r > 0.0 {
            h -= *r * r.ln();
        }
    }
    h
}
