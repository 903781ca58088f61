//! Experiment driver for the `dfris-core` optimizer: scenario files, seeded
//! Monte-Carlo sweeps and convergence traces, all written as CSV.

pub mod config;
pub mod error;
pub mod sweep;
pub mod trace;

pub use config::{load_config, parse_config, ScenarioConfig};
pub use error::{ConfigError, RunError};
