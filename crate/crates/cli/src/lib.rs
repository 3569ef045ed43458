//! Command-line layer for `pbk`: scenario files, output formats and the
//! `analytic`, `simulate` and `estimate` subcommands.

pub mod commands;
pub mod output;
pub mod scenario;

pub use commands::{cmd_analytic, cmd_estimate, cmd_simulate, CliError, Format};
pub use scenario::{parse_scenario, parse_scenario_str, Scenario, ScenarioError, ScenarioFile};

/// Exit status: success or all cells within tolerance.
pub const EXIT_OK: u8 = 0;
/// Exit status: at least one off-diagonal cell outside tolerance.
pub const EXIT_COMPARISON_FAILED: u8 = 1;
/// Exit status: usage, configuration or runtime error.
pub const EXIT_ERROR: u8 = 2;
