//! Configuration-driven pipeline behind the `spellmap` binary.

pub mod config;
pub mod pipeline;
pub mod plot;

pub use config::{derive_seed, ConfigError, PipelineConfig};
pub use pipeline::{run, RunError, RunManifest, Stage, StageReport};
