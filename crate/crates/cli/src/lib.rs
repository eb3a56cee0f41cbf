//! Scenario loading, runs with JSON-lines traces, and analysis reports for
//! the `coalguard` command.

pub mod commands;
pub mod scenario;

pub use scenario::{load_scenario, parse_scenario, LoadOptions, Scenario, ScenarioError};
