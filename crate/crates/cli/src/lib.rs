//! Configuration-driven runner for the `hphi-core` verification suites.

pub mod config;
pub mod error;
pub mod report;
pub mod suites;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use report::RunReport;
