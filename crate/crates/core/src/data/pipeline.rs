use serde::{Deserialize, Serialize};

use super::{stratified_split, Balancing, Dataset, FittedPreprocessor, OneHotMap, SplitIndices};
use crate::error::Result;
use crate::numerics::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub pca_components: usize,
    pub balancing: Balancing,
    pub split: [f64; 3],
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            pca_components: 6,
            balancing: Balancing::None,
            split: [0.70, 0.15, 0.15],
        }
    }
}

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub preprocessor: FittedPreprocessor,
    pub split: SplitIndices,
}

/// Split first, fit standardization and PCA on the training rows only,
/// transform every split, then balance the transformed training split.
pub fn prepare(
    raw: &Dataset,
    one_hot: Vec<OneHotMap>,
    config: &PipelineConfig,
    rng: &mut SeededRng,
) -> Result<PreparedData> {
    let split = stratified_split(&raw.labels, raw.n_classes(), config.split, rng)?;
    let train_raw = raw.subset(&split.train);
    let preprocessor =
        FittedPreprocessor::fit(&train_raw, one_hot, config.pca_components, config.balancing)?;
    let train = config
        .balancing
        .apply(&preprocessor.transform(&train_raw)?, rng)?;
    Ok(PreparedData {
        train,
        val: preprocessor.transform(&raw.subset(&split.val))?,
        test: preprocessor.transform(&raw.subset(&split.test))?,
        preprocessor,
        split,
    })
}
