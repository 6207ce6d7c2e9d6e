//! Grid execution: configuration, setup enumeration, matrix cache and the
//! end-to-end run.

mod cache;
mod config;
mod grid;
mod run;

pub use cache::{cache_key, sha256_hex, MatrixCache, TOOL_VERSION};
pub use config::{ConfigError, Params, WorkflowConfig};
pub use grid::enumerate_setups;
pub use run::{load_input, run_workflow, ManifestEntry, RunManifest, RunOptions, RunOutcome, SetupStatus, WorkflowError};
