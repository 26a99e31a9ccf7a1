//! Experiment driver for `cogradar`: TOML run configuration, the `simulate`, `train`,
//! `sweep`, `nsga` and `compare` subcommands, CSV/SVG emission and run manifests.

pub mod commands;
pub mod config;
pub mod error;
pub mod fronts;
pub mod manifest;
pub mod svg;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
