//! Experiment drivers, configuration files and output writers.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::{run, RunArtifacts};
