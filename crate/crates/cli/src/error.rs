use std::path::PathBuf;

use jd_diag::correction::CorrectionError;
use jd_diag::{LinalgError, RitzError, SolverError, StagnationError};
use thiserror::Error;

use crate::mm::MmError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const REPRO_FAILED: i32 = 1;
    pub const INVALID_INPUT: i32 = 2;
    pub const DIMENSION: i32 = 3;
    pub const SINGULAR_SHIFT: i32 = 4;
    pub const NOT_CONVERGED: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: MmError,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular shift: {0}")]
    SingularShift(String),
    #[error("cannot write report: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } | Self::Parse { .. } | Self::Invalid(_) | Self::Output(_) => exit::INVALID_INPUT,
            Self::Dimension(_) => exit::DIMENSION,
            Self::SingularShift(_) => exit::SINGULAR_SHIFT,
        }
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::DimensionMismatch { .. } | LinalgError::NotSquare { .. } => Self::Dimension(e.to_string()),
            other => Self::Invalid(other.to_string()),
        }
    }
}

impl From<RitzError> for CliError {
    fn from(e: RitzError) -> Self {
        match e {
            RitzError::Linalg(l) => l.into(),
            RitzError::DimensionMismatch { .. } => Self::Dimension(e.to_string()),
            other => Self::Invalid(other.to_string()),
        }
    }
}

impl From<CorrectionError> for CliError {
    fn from(e: CorrectionError) -> Self {
        match e {
            CorrectionError::Linalg(l) => l.into(),
            CorrectionError::SingularShift { .. } => Self::SingularShift(e.to_string()),
            CorrectionError::DimensionMismatch { .. } => Self::Dimension(e.to_string()),
            other => Self::Invalid(other.to_string()),
        }
    }
}

impl From<StagnationError> for CliError {
    fn from(e: StagnationError) -> Self {
        match e {
            StagnationError::Linalg(l) => l.into(),
            StagnationError::Ritz(r) => r.into(),
            StagnationError::Correction(c) => c.into(),
            StagnationError::DimensionMismatch { .. } => Self::Dimension(e.to_string()),
            other => Self::Invalid(other.to_string()),
        }
    }
}

/// Solver failures that carry no trace; the rest are reported with exit 5.
impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Linalg(l) => l.into(),
            SolverError::Ritz(r) => r.into(),
            SolverError::DimensionMismatch { .. } => Self::Dimension(e.to_string()),
            other => Self::Invalid(other.to_string()),
        }
    }
}
