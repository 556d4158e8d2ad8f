//! Scenario configuration, experiment execution, error metrics against a
//! reference solution, and the CSV/field-data emitters behind the CLI.

pub mod config;
pub mod errors;
pub mod io;
pub mod run;
pub mod study;

pub use config::{AlphaMode, GuessKind, Method, ScenarioConfig};
pub use errors::{compute_errors, ErrorReport};
pub use run::{run, RunArtifacts};
pub use study::{time_grid_study, StudyRow};
