//! Configuration, scenario runner and CSV output for the `slitcorr` tool.

pub mod acceptance;
pub mod config;
pub mod scenario;
pub mod table;

pub use config::{parse_config, ConfigError, Engine, Scenario, ScenarioConfig};
pub use scenario::{run_scenario, Report, RunError, ScenarioOutput};
pub use table::Table;
