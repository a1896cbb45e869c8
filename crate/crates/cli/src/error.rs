use std::path::PathBuf;

use seorder_core::Error as CoreError;
use thiserror::Error;

/// Input problems; all map to exit code 1.
#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl InputError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        InputError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn parse(path: &str, e: &serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends " at line L column C"; the prefix carries it already.
        let message = match message.rfind(" at line ") {
            Some(k) => message[..k].to_string(),
            None => message,
        };
        InputError::Parse {
            path: path.to_string(),
            line: e.line(),
            column: e.column(),
            message,
        }
    }

    /// Names the offending field of a parameter block for a validation error.
    pub fn from_params(side: &str, e: CoreError) -> Self {
        let (field, message) = match e {
            CoreError::NonSymmetric { row, col } => (
                format!("{side}.omega"),
                format!("not symmetric: entry ({row},{col}) differs from entry ({col},{row})"),
            ),
            CoreError::NotPositiveDefinite { min_eigenvalue } => (
                format!("{side}.omega"),
                format!("not positive definite (smallest eigenvalue {min_eigenvalue:e})"),
            ),
            CoreError::DeltaOutOfRange { index, value } => {
                (format!("{side}.delta[{index}]"), format!("{value} is outside (-1, 1)"))
            }
            CoreError::RepresentationInfeasible { min_eigenvalue } => (
                format!("{side}.delta"),
                format!(
                    "Psi - delta delta' is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})"
                ),
            ),
            CoreError::BadNu => (format!("{side}.generator.nu"), "must be finite and positive".to_string()),
            CoreError::NonFinite => (side.to_string(), "contains a non-finite number".to_string()),
            other => (side.to_string(), other.to_string()),
        };
        InputError::Invalid { field, message }
    }
}
