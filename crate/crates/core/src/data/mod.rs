//! Tabular ingestion and the preparation pipeline: one-hot encoding,
//! standardization, PCA, class balancing and stratified splitting.

mod balance;
mod csv_io;
mod pipeline;
mod preprocess;
mod split;
mod synth;

pub use balance::{smote, undersample, Balancing};
pub use csv_io::{load_csv, write_csv, ColumnRole, ColumnSpec, OneHotMap, Schema};
pub use pipeline::{prepare, PipelineConfig, PreparedData};
pub use preprocess::{fit_pca, fit_standardize, FittedPreprocessor, Pca, Standardizer};
pub use split::{stratified_split, SplitIndices};
pub use synth::synth_blobs;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Feature matrix with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if feature_names.len() != features.cols() {
            return Err(Error::Shape(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.cols()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::Data(format!(
                "label {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        Ok(Self {
            features,
            labels,
            feature_names,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    /// Rows in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    pub(crate) fn with_features(&self, features: Matrix, feature_names: Vec<String>) -> Dataset {
        Dataset {
            features,
            labels: self.labels.clone(),
            feature_names,
            class_names: self.class_names.clone(),
        }
    }
}
