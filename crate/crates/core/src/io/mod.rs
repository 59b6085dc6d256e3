//! Configuration, output files and subcommand dispatch.

pub mod config;
pub mod manifest;
pub mod run;
pub mod snapshot;

pub use config::{parse_config, parse_config_str, Config, Resolved};
pub use manifest::RunManifest;
pub use run::{run_resolved, run_subcommand, RunFlags, Subcommand};
pub use snapshot::{read_snapshot, write_snapshot};
