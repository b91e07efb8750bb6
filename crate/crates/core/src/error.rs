use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: expected {expected}, got {found}")]
    Size { expected: String, found: String },

    #[error("field is not Hermitian-symmetric (max defect {defect:.3e})")]
    Symmetry { defect: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite value in right-hand side at t = {t}")]
    Divergence { t: f64 },

    #[error("step size {dt:.3e} fell below minimum {dt_min:.3e} at t = {t}")]
    StepUnderflow { t: f64, dt: f64, dt_min: f64 },

    #[error("singular kernel evaluation: {0}")]
    Singularity(String),

    #[error("no samples in window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("slope fit needs at least 3 usable shells, got {usable}")]
    Fit { usable: usize },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the CLI reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence { .. } | Error::StepUnderflow { .. } | Error::Singularity(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn size(expected: impl ToString, found: impl ToString) -> Self {
        Error::Size {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}
