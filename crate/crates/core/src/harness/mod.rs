//! Experiment harness: configuration, builtin scenarios, the sweep runner
//! and table output.

pub mod config;
pub mod report;
pub mod runner;
pub mod scenarios;

pub use config::{ExperimentConfig, OutputFormat, RunMode, SolverKind, Sweep};
pub use report::{emit, emit_to_path, ResultRow};
pub use runner::{run_experiment, RunOutcome};
