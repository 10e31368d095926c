//! Scenario runner for the mourre-core experiments.

pub mod config;
pub mod error;
pub mod report;
pub mod scenario;

pub use config::{parse_config, parse_config_str, ScenarioConfig};
pub use error::CliError;
pub use report::ReportBundle;
pub use scenario::{convergence_into, convergence_study, run_into, run_scenario, RunOptions, Which};
