//! Metrics, artifact files, SVG rendering and the command-line front end.

mod cli;
mod config;
mod emit;
mod metrics;
pub mod svg;

pub use cli::{run, PreprocessState, CHECKPOINT_FILE, HISTORY_JSON_FILE, PREPROCESSOR_FILE};
pub use config::{InterpretOptions, ModelOptions, RunConfig, SynthOptions, DEFAULT_SEED};
pub use emit::{emit_report, history_csv, InterpretArtifacts, UtilityRow};
pub use metrics::{compute_metrics, f1, EvaluationReport};
