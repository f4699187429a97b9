//! Experiment runner for the `mutrate` controllers: config parsing, batch
//! execution with CSV output, and result summaries.

pub mod config;
pub mod runner;
pub mod summary;

pub use config::{ConfigError, ExperimentSpec, Preset, ProblemId, Sources};
pub use runner::{run_experiment, BatchOutcome, RunError, RunResult};
pub use summary::{summarize, Summary};
