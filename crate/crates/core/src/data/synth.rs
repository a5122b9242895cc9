use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, SeededRng};

/// Isotropic unit-variance Gaussian blobs. Class `c` is centred at
/// `±(separation/√2)·e_{c mod d}` (sign flips for the second round of axes,
/// distance grows for later rounds), so the first `2d` class means are at
/// least `separation` apart.
pub fn synth_blobs(
    n_per_class: usize,
    n_classes: usize,
    dim: usize,
    separation: f64,
    rng: &mut SeededRng,
) -> Result<Dataset> {
    if n_per_class == 0 || n_classes == 0 || dim == 0 || !(separation >= 0.0) {
        return Err(Error::Parameter(format!(
            "synth_blobs needs positive sizes and separation >= 0, got n={n_per_class}, C={n_classes}, d={dim}, sep={separation}"
        )));
    }
    let radius = separation / std::f64::consts::SQRT_2;
    let mut data = Vec::with_capacity(n_per_class * n_classes * dim);
    let mut labels = Vec::with_capacity(n_per_class * n_classes);
    for c in 0..n_classes {
        let axis = c % dim;
        let round = c / dim;
        let sign = if round % 2 == 0 { 1.0 } else { -1.0 };
        let scale = radius * (1 + round / 2) as f64;
        for _ in 0..n_per_class {
            for j in 0..dim {
                let centre = if j == axis { sign * scale } else { 0.0 };
                data.push(rng.normal(centre, 1.0));
            }
            labels.push(c);
        }
    }
    let class_names = if n_classes == 3 {
        vec!["Low".into(), "Average".into(), "High".into()]
    } else {
        (0..n_classes).map(|c| format!("class{c}")).collect()
    };
    Dataset::new(
        Matrix::new(n_per_class * n_classes, dim, data)?,
        labels,
        (0..dim).map(|j| format!("x{j}")).collect(),
        class_names,
    )
}
