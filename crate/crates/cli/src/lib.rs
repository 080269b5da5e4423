//! Batch pipeline around the `spatial-katz` library: reads one TOML run
//! config, scores the requested Katz models on a chronological split, and
//! writes reports, curves, score tables and a summary table.

pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;

pub use config::{LoadedConfig, Model, RunConfig};
pub use error::{CliError, Result};
pub use pipeline::{eval, run, score, synth, Overrides};
