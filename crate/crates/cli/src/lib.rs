//! Scenario runner: each scenario builds covers, runs the spectral checks
//! and reports every certified inequality with both of its sides.

pub mod config;
pub mod error;
pub mod report;
mod scenarios;

pub use config::ScenarioConfig;
pub use error::{CliError, Result};
pub use report::{Check, Diagnostic, Relation, ScenarioOutput, Summary};

/// Scenario names in a fixed order.
pub fn list_scenarios() -> Vec<&'static str> {
    scenarios::SCENARIOS.iter().map(|s| s.name).collect()
}

/// One-line description of a scenario.
pub fn describe(name: &str) -> Option<&'static str> {
    scenarios::find(name).map(|s| s.about)
}

/// Runs a scenario in memory. Failed checks are part of the output, not errors.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    let scenario =
        scenarios::find(&config.scenario).ok_or_else(|| CliError::UnknownScenario(config.scenario.clone()))?;
    (scenario.run)(&config.params, config.seed)
}
