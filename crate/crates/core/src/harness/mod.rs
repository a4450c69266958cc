//! Convergence studies, reports and property suites.

pub mod catalog;
pub mod config;
pub mod report;
pub mod study;
pub mod verify;

pub use catalog::ProblemId;
pub use config::{load_config, parse_config, PdeConfig, Reference, StudyConfig};
pub use report::{emit_csv, emit_plotdata, emit_rates_csv, ErrorReport, ErrorRow, LadderEntry, RateRow};
pub use study::{double_mesh_error, double_mesh_error_scalar, run_convergence};
pub use verify::Outcome;
