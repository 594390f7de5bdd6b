//! Scenario files, built-in experiments, verification checks and output for
//! the `thermoflock` command-line tool.

pub mod builtins;
pub mod checks;
pub mod error;
pub mod output;
pub mod run;
pub mod scenario;

pub use checks::{CheckResult, Status};
pub use error::CliError;
pub use run::{run, RunOutput};
pub use scenario::{load_scenario, load_with, Overrides, Scenario, ScenarioFile};
