use serde::{Deserialize, Serialize};

use super::{Balancing, Dataset, OneHotMap};
use crate::error::{Error, Result};
use crate::numerics::{sym_eigen, Matrix};

/// Columns whose population std falls below this are treated as constant.
const CONSTANT_STD: f64 = 1e-12;

/// Per-feature standardization `x' = (x − μ)/σ` fitted on training data.
/// Constant columns are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub input_names: Vec<String>,
    /// Indices of retained input columns.
    pub kept: Vec<usize>,
    pub means: Vec<f64>,
    /// Population standard deviations (divide by n).
    pub stds: Vec<f64>,
}

pub fn fit_standardize(data: &Dataset) -> Result<Standardizer> {
    let n = data.len();
    if n < 2 {
        return Err(Error::Data(format!("standardization needs at least 2 rows, got {n}")));
    }
    let all_means = data.features.column_means();
    let mut kept = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for (j, &mu) in all_means.iter().enumerate() {
        let var = data
            .features
            .row_iter()
            .map(|r| (r[j] - mu).powi(2))
            .sum::<f64>()
            / n as f64;
        let sd = var.sqrt();
        if sd < CONSTANT_STD {
            log::warn!("dropping constant feature {:?}", data.feature_names[j]);
            continue;
        }
        kept.push(j);
        means.push(mu);
        stds.push(sd);
    }
    if kept.is_empty() {
        return Err(Error::Degenerate("every feature is constant".into()));
    }
    Ok(Standardizer {
        input_names: data.feature_names.clone(),
        kept,
        means,
        stds,
    })
}

impl Standardizer {
    pub fn output_names(&self) -> Vec<String> {
        self.kept.iter().map(|&j| self.input_names[j].clone()).collect()
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        if data.n_features() != self.input_names.len() {
            return Err(Error::Shape(format!(
                "standardizer fitted on {} features, data has {}",
                self.input_names.len(),
                data.n_features()
            )));
        }
        let mut out = Vec::with_capacity(data.len() * self.kept.len());
        for r in data.features.row_iter() {
            for ((&j, mu), sd) in self.kept.iter().zip(&self.means).zip(&self.stds) {
                out.push((r[j] - mu) / sd);
            }
        }
        let features = Matrix::new(data.len(), self.kept.len(), out)?;
        Ok(data.with_features(features, self.output_names()))
    }
}

/// Principal component projection `z = W(x − mean)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `n_components × d`, orthonormal rows.
    pub components: Matrix,
    /// Sample variance along each component, descending.
    pub explained_variance: Vec<f64>,
    /// Trace of the sample covariance.
    pub total_variance: f64,
}

/// Top-`n_components` eigenvectors of the sample covariance (divide by n−1).
/// Each component's largest-magnitude entry is made positive.
pub fn fit_pca(data: &Dataset, n_components: usize) -> Result<Pca> {
    let d = data.n_features();
    if n_components == 0 || n_components > d {
        return Err(Error::Parameter(format!(
            "PCA components must be in 1..={d}, got {n_components}"
        )));
    }
    let n = data.len();
    if n < 2 {
        return Err(Error::Data(format!("PCA needs at least 2 rows, got {n}")));
    }
    let mean = data.features.column_means();
    let mut cov = Matrix::zeros(d, d);
    for r in data.features.row_iter() {
        for i in 0..d {
            let di = r[i] - mean[i];
            for j in i..d {
                cov[(i, j)] += di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / (n - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let total_variance = (0..d).map(|i| cov[(i, i)]).sum();
    let eig = sym_eigen(&cov)?;
    let mut components = Matrix::zeros(n_components, d);
    for k in 0..n_components {
        let mut v = eig.vector(k);
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.row_mut(k).copy_from_slice(&v);
    }
    Ok(Pca {
        mean,
        components,
        explained_variance: eig.values[..n_components].iter().map(|v| v.max(0.0)).collect(),
        total_variance,
    })
}

impl Pca {
    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        self.components.matvec(&centered)
    }

    /// `x̂ = Wᵀz + mean`
    pub fn reconstruct(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.components.transpose_matvec(z)?;
        x.iter_mut().zip(&self.mean).for_each(|(a, m)| *a += m);
        Ok(x)
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        if data.n_features() != self.mean.len() {
            return Err(Error::Shape(format!(
                "PCA fitted on {} features, data has {}",
                self.mean.len(),
                data.n_features()
            )));
        }
        let mut out = Vec::with_capacity(data.len() * self.n_components());
        for r in data.features.row_iter() {
            out.extend(self.project(r)?);
        }
        let features = Matrix::new(data.len(), self.n_components(), out)?;
        let names = (1..=self.n_components()).map(|k| format!("pc{k}")).collect();
        Ok(data.with_features(features, names))
    }
}

/// Everything fitted on the training split, applied unchanged to the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPreprocessor {
    pub one_hot: Vec<OneHotMap>,
    pub standardizer: Standardizer,
    pub pca: Pca,
    pub balancing: Balancing,
    pub class_names: Vec<String>,
}

impl FittedPreprocessor {
    pub fn fit(
        train: &Dataset,
        one_hot: Vec<OneHotMap>,
        n_components: usize,
        balancing: Balancing,
    ) -> Result<Self> {
        let standardizer = fit_standardize(train)?;
        let standardized = standardizer.apply(train)?;
        if n_components > standardized.n_features() {
            return Err(Error::Parameter(format!(
                "asked for {n_components} principal components but only {} usable features remain",
                standardized.n_features()
            )));
        }
        let pca = fit_pca(&standardized, n_components)?;
        Ok(Self {
            one_hot,
            standardizer,
            pca,
            balancing,
            class_names: train.class_names.clone(),
        })
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        self.pca.apply(&self.standardizer.apply(data)?)
    }

    pub fn output_dim(&self) -> usize {
        self.pca.n_components()
    }

    /// Hex SHA-256 of the canonical JSON form; checkpoints record it.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("preprocessor serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    fn dataset(rows: &[Vec<f64>]) -> Dataset {
        let m = Matrix::from_rows(rows).unwrap();
        let names = (0..m.cols()).map(|j| format!("f{j}")).collect();
        Dataset::new(m, vec![0; rows.len()], names, vec!["a".into()]).unwrap()
    }

    fn random_dataset(n: usize, d: usize, rng: &mut SeededRng) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|j| rng.normal(j as f64, 1.0 + j as f64)).collect())
            .collect();
        dataset(&rows)
    }

    #[test]
    fn standardizes_closed_form_column() {
        let d = dataset(&[vec![1.0], vec![2.0], vec![3.0]]);
        let s = fit_standardize(&d).unwrap();
        assert!((s.means[0] - 2.0).abs() < 1e-15);
        assert!((s.stds[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let out = s.apply(&d).unwrap();
        let expect = [-1.224744871391589, 0.0, 1.224744871391589];
        for (v, e) in out.features.column(0).iter().zip(expect) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn transformed_columns_are_standard() {
        let d = random_dataset(40, 5, &mut SeededRng::new(1));
        let out = fit_standardize(&d).unwrap().apply(&d).unwrap();
        for j in 0..5 {
            let c = out.features.column(j);
            let mean = c.iter().sum::<f64>() / 40.0;
            let sd = (c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 40.0).sqrt();
            assert!(mean.abs() < 1e-10 && (sd - 1.0).abs() < 1e-10);
        }
        // refitting on standardized output is the identity
        let again = fit_standardize(&out).unwrap().apply(&out).unwrap();
        assert!(again.features.max_abs_diff(&out.features) < 1e-10);
    }

    #[test]
    fn held_out_data_uses_training_statistics() {
        let mut rng = SeededRng::new(2);
        let train = random_dataset(30, 3, &mut rng);
        let test = random_dataset(10, 3, &mut rng);
        let s = fit_standardize(&train).unwrap();
        let before = s.clone();
        let out = s.apply(&test).unwrap();
        assert_eq!(s, before);
        assert!((out.features[(0, 1)] - (test.features[(0, 1)] - s.means[1]) / s.stds[1]).abs() < 1e-15);
    }

    #[test]
    fn constant_columns_are_dropped() {
        let d = dataset(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![4.0, 5.0]]);
        let s = fit_standardize(&d).unwrap();
        assert_eq!(s.kept, vec![0]);
        let all_const = dataset(&[vec![5.0], vec![5.0]]);
        assert!(matches!(fit_standardize(&all_const), Err(Error::Degenerate(_))));
    }

    #[test]
    fn exact_subspace_is_reconstructed() {
        let mut rng = SeededRng::new(3);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| vec![rng.normal(0.0, 2.0), 0.0, rng.normal(0.0, 1.0), 0.0])
            .collect();
        let d = dataset(&rows);
        let pca = fit_pca(&d, 2).unwrap();
        for r in d.features.row_iter() {
            let back = pca.reconstruct(&pca.project(r).unwrap()).unwrap();
            for (a, b) in back.iter().zip(r) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn full_basis_keeps_total_variance() {
        let d = random_dataset(25, 4, &mut SeededRng::new(4));
        let pca = fit_pca(&d, 4).unwrap();
        let sum: f64 = pca.explained_variance.iter().sum();
        assert!((sum - pca.total_variance).abs() < 1e-8);
        let wwt = pca.components.matmul(&pca.components.transpose()).unwrap();
        assert!(wwt.max_abs_diff(&Matrix::identity(4)) < 1e-8);
        assert!(pca.explained_variance.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn sign_convention_makes_largest_entry_positive() {
        let d = random_dataset(25, 4, &mut SeededRng::new(6));
        let pca = fit_pca(&d, 3).unwrap();
        for r in pca.components.row_iter() {
            let big = r.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn too_many_components() {
        let d = random_dataset(10, 3, &mut SeededRng::new(7));
        assert!(matches!(fit_pca(&d, 4), Err(Error::Parameter(_))));
    }
}
