use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("samples extend to radius {radius:.6} beyond the admissible support radius {limit:.6}")]
    SupportViolation { radius: f64, limit: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("iterative solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular or rank-deficient system (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("{count} of {total} solves failed; first failure at {first_point}: {first_error}")]
    Batch {
        count: usize,
        total: usize,
        first_point: Complex64,
        first_error: Box<Error>,
        failed_points: Vec<Complex64>,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True when the failure came out of a numerical solve rather than bad input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::NonConvergence { .. } | Error::Singular { .. } => true,
            Error::Batch { first_error, .. } => first_error.is_solver_failure(),
            Error::Stage { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }

    pub(crate) fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
