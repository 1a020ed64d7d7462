use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] wkam_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed field file {path}: {reason}")]
    FieldFormat { path: PathBuf, reason: String },

    #[error("{variant} fit refused: {above} samples above the noise floor {floor:e}, need {needed}")]
    InsufficientSamples {
        variant: String,
        above: usize,
        needed: usize,
        floor: f64,
    },

    #[error("coverage radius {radius} not reached by the horizon {horizon}")]
    Timeout { radius: f64, horizon: f64 },
}

impl HarnessError {
    /// 2 for anything the user has to fix in the inputs, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::FieldFormat { .. } => 2,
            HarnessError::Core(wkam_core::Error::Config(_) | wkam_core::Error::GridMismatch(_)) => 2,
            HarnessError::Core(wkam_core::Error::DisconnectedKernel { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
