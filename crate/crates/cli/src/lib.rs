//! Experiments, workflows and command-line plumbing for visco-acoustic IR-WRI.

pub mod cli;
pub mod config;
pub mod cs1d;
pub mod error;
pub mod extraction;
pub mod geometry;
pub mod inclusion;
pub mod metrics;
pub mod output;
pub mod piecewise;
pub mod workflows;

pub use config::{ExperimentConfig, ScenarioKind};
pub use error::{CliError, CliResult};
pub use metrics::MetricsReport;
