//! Library side of the `turnhash` command: dataset files, collision
//! experiments and retrieval benchmarks. The binary is a thin argument parser
//! over these functions, and the acceptance tests drive them directly.

pub mod bench;
pub mod dataset;
pub mod eval;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or invalid input data.
    #[error("{0}")]
    Validation(String),
    /// Parameters that violate a guarantee's precondition.
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<turnhash::polyindex::PolyIndexError> for CliError {
    fn from(e: turnhash::polyindex::PolyIndexError) -> Self {
        use turnhash::polyindex::PolyIndexError;
        if e.is_precondition() {
            CliError::Precondition(e.to_string())
        } else if matches!(e, PolyIndexError::TooManyVertices { .. } | PolyIndexError::Polygon(_)) {
            CliError::Validation(e.to_string())
        } else {
            CliError::Other(e.to_string())
        }
    }
}

/// `x` with nine significant digits; fixed notation for moderate magnitudes,
/// scientific otherwise.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        format!("{:.*}", (8 - exp).max(0) as usize, x)
    } else {
        format!("{x:.8e}")
    }
}
