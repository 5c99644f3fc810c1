//! Experiment runner for `shrinker-core`: configuration, subcommands, report files
//! and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod specs;

pub use config::ExperimentConfig;
pub use error::{LabError, LabResult};
pub use output::{Report, Table};
