//! Scenario files, built-in templates, run summaries and the commands behind
//! the `byzgrad` binary.

pub mod commands;
pub mod error;
pub mod scenario_file;
pub mod summary;
pub mod templates;

pub use commands::{cmd_check, cmd_gen, cmd_run, run_file, trace_csv, RunOptions, RunOutcome};
pub use error::CliError;
pub use scenario_file::ScenarioFile;
pub use summary::RunSummary;
pub use templates::{generate, GenParams, TEMPLATES};
