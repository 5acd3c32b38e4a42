//! Experiment runner for `tris-isac`.
//!
//! Loads a TOML experiment config, runs convergence traces, parameter sweeps
//! and timing studies in parallel, and writes CSV/JSON result files. Every
//! reported metric is recomputed from the returned design through
//! `tris_isac::metrics`.

use std::path::PathBuf;

pub mod config;
pub mod experiments;

pub use config::{load_config, Axis, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] tris_isac::Error),

    #[error("output error: {0}")]
    Output(String),
}

impl BenchError {
    /// Process exit code: 2 for bad input, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Parse(_) | BenchError::Invalid { .. } => 2,
            BenchError::Core(tris_isac::Error::InvalidParameter { .. }) => 2,
            _ => 1,
        }
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for BenchError {
    fn from(e: serde_json::Error) -> Self {
        BenchError::Output(e.to_string())
    }
}
