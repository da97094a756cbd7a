//! Configured sweeps, CSV output, and the verification suite.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod sweep;
pub mod verify;

pub use commands::{cmd_coverage, cmd_figures, cmd_run, output_dir, OUT_ENV};
pub use config::ExperimentConfig;
pub use verify::{run_verify, run_verify_with, Level, VerifyReport};
