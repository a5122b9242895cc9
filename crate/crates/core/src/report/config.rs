use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::PipelineConfig;
use crate::error::{Error, Result};
use crate::interpret::{IndecisionConfig, TsneConfig};
use crate::model::TrainConfig;
use crate::quantum::CircuitConfig;

/// Classical layers around the circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOptions {
    pub post_hidden: Vec<usize>,
    pub dropout: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            post_hidden: vec![16],
            dropout: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpretOptions {
    /// Test-split indices explained by `report`.
    pub instances: Vec<usize>,
    pub ig_steps: usize,
    pub smoothgrad_samples: usize,
    pub smoothgrad_sigma: f64,
    pub prototype_top_k: usize,
    pub entropy_bins: usize,
    pub indecision: IndecisionConfig,
    pub tsne: TsneConfig,
}

impl Default for InterpretOptions {
    fn default() -> Self {
        Self {
            instances: vec![0],
            ig_steps: 128,
            smoothgrad_samples: 25,
            smoothgrad_sigma: 0.1,
            prototype_top_k: 5,
            entropy_bins: 10,
            indecision: IndecisionConfig::default(),
            tsne: TsneConfig::default(),
        }
    }
}

/// Synthetic data settings for the `synth` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthOptions {
    pub n_per_class: usize,
    pub n_classes: usize,
    pub dim: usize,
    pub separation: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            n_per_class: 100,
            n_classes: 3,
            dim: 6,
            separation: 6.0,
        }
    }
}

/// The whole experiment in one JSON document. Relative paths resolve
/// against the working directory. Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Defaults to `<out>/data.csv`.
    pub data: Option<PathBuf>,
    /// Defaults to `<out>/schema.json`.
    pub schema: Option<PathBuf>,
    pub synth: SynthOptions,
    pub preprocessing: PipelineConfig,
    pub circuit: CircuitConfig,
    pub model: ModelOptions,
    pub training: TrainConfig,
    pub interpret: InterpretOptions,
    pub out: Option<PathBuf>,
    /// Overrides every component seed when set.
    pub seed: Option<u64>,
}

pub const DEFAULT_SEED: u64 = 42;

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }

    /// Pushes one seed into every seeded component.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.training.seed = seed;
        self.interpret.indecision.seed = seed;
        self.interpret.tsne.seed = seed;
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn data_path(&self) -> PathBuf {
        self.data.clone().unwrap_or_else(|| self.out_dir().join("data.csv"))
    }

    pub fn schema_path(&self) -> PathBuf {
        self.schema.clone().unwrap_or_else(|| self.out_dir().join("schema.json"))
    }

    pub fn validate(&self) -> Result<()> {
        self.circuit.validate()?;
        self.training.validate()?;
        if !(0.0..1.0).contains(&self.model.dropout) {
            return Err(Error::Parameter(format!("dropout must be in [0, 1), got {}", self.model.dropout)));
        }
        if self.preprocessing.pca_components != self.circuit.n_qubits {
            return Err(Error::Parameter(format!(
                "pca_components ({}) must equal n_qubits ({})",
                self.preprocessing.pca_components, self.circuit.n_qubits
            )));
        }
        Ok(())
    }
}
