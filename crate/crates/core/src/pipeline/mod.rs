//! Config-driven runs: validation, solving, transform sampling, weight extraction and
//! reporting, with JSON/CSV outputs, a kernel cache and a run manifest.

pub mod cache;
pub mod commands;
pub mod config;
pub mod io;
pub mod manifest;

pub use cache::{cache_key, KernelCache, Lookup};
pub use commands::{
    cmd_report, cmd_solve, cmd_transform, cmd_validate, cmd_weights, exit_code, Outcome, RunOptions, EXIT_CERTIFICATION,
    EXIT_IO, EXIT_NO_SOLUTION, EXIT_OK, EXIT_VALIDATION,
};
pub use config::{PipelineConfig, ValidatedConfig};
pub use manifest::RunManifest;
