//! Experiment sweeps, synthetic data and output emission behind the `perf-dro` binary.

pub mod cli;
pub mod config;
pub mod data;
pub mod experiments;
pub mod output;
pub mod svg;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::run_experiment;
pub use output::{emit_outputs, SweepResult};
