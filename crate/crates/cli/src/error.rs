use thiserror::Error;
use torusflow_core::Error as CoreError;

/// Failure of a run, mapped onto the process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Precision(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::PrecisionExhausted(m) => CliError::Precision(m),
            CoreError::Transversality { .. } | CoreError::ParallelEdge { .. } => {
                CliError::Validation(format!("{e}; the exact engine needs every facet transversal to α (try --engine quadrature)"))
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
