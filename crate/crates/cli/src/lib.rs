//! Configuration-driven experiment runner for `kresnet-core`.
//!
//! A run reads one TOML file (or a shipped recipe), validates it as a
//! whole, executes it and writes headered CSVs plus a `manifest.json`
//! into `<output root>/<output>`. The output root defaults to `runs` and
//! can be overridden with `KRESNET_OUTPUT_ROOT`.

pub mod config;
pub mod error;
pub mod ingest;
pub mod output;
pub mod recipes;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult, ConfigIssue};
pub use output::RunManifest;
pub use runner::{output_root, run, RunOptions};
