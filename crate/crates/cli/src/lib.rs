//! Command-line driver: presets, run manifests, CSV/JSON/SVG outputs and the invariant suite.

pub mod config;
pub mod output;
pub mod plot;
pub mod run;
pub mod validate;

use std::path::Path;

use thiserror::Error;

pub use config::{AnyConfig, CommandKind, PRESETS};
pub use output::{RunManifest, MANIFEST_FILE};
pub use run::{execute, rerun, RunOptions};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;
pub const EXIT_GUARD: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] npsq_core::Error),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("invariant failure: {0}")]
    Invariant(String),
}

impl CliError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        use npsq_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Invariant(_) => EXIT_INVARIANT,
            CliError::Core(e) => match e {
                E::Config(_)
                | E::InvalidParameter { .. }
                | E::InvalidTruncation(_)
                | E::DimensionMismatch { .. }
                | E::IndexOutOfRange { .. }
                | E::Serialization(_) => EXIT_CONFIG,
                E::GuardTripped(_) | E::LeakageExceeded { .. } => EXIT_GUARD,
                _ => EXIT_INVARIANT,
            },
        }
    }
}
