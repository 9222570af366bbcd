//! Configuration, presets and output plumbing for the `cqed` binary.

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod runner;

pub use config::{canonical_json, config_hash, parse_config};
pub use error::CliError;
pub use output::RunManifest;
pub use runner::{run_experiment, run_to_dir, Experiment, RunOutput};
