//! Experiment harness around `alr-core`: JSON experiment configs, artifact
//! writing (metrics, snapshot matrices, heatmaps, summaries), and the
//! `alr-lab` command-line interface.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

pub use config::{ExperimentConfig, MethodName};
pub use error::{LabError, Result};
