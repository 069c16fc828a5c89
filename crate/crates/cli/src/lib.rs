//! Config-driven experiments and checker batteries over the `otsurf` library.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::{CheckerToggles, ExperimentConfig, Scenario};
pub use error::{CliError, Result};
pub use experiment::{run_experiment, ExperimentRecord, PointResult};
pub use report::emit_report;
