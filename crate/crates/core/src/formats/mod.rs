//! On-disk formats: structured-text pose files, line-delimited JSON records,
//! flat denoiser parameter files, and portable bitmap masks. Every format
//! opens with a schema tag and round-trips exactly.

pub mod denoiser_file;
pub mod pbm;
pub mod posefile;
pub mod records;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("schema mismatch: expected {expected:?}, found {found:?}")]
    SchemaMismatch { expected: String, found: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl FormatError {
    pub(crate) fn parse(path: &std::path::Path, line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse {
            path: path.display().to_string(),
            line,
            message: message.into(),
        }
    }
}
