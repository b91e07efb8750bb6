//! Configuration, run orchestration and file formats.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod files;
pub mod runner;

pub use checkpoint::Checkpoint;
pub use commands::{
    compare_resolution, slope_command, spectrum_command, vortex_command, CompareOptions, Invariants,
    ResolutionReport, VortexConfig, VortexReport,
};
pub use config::RunConfig;
pub use runner::{run, run_or_reuse, RunSummary};
