//! Experiment runner for Wasserstein GANs with gradient penalty and
//! consistency regularization: config resolution, dataset files,
//! checkpoints, metric exports and the `ctgan` command line.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataio;
pub mod error;
pub mod metrics;
pub mod run;
pub mod samples;

pub use error::{CliError, CliResult};
