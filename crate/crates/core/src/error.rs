use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("symmetric eigensolver did not converge (n = {n}, ‖X‖_F = {frobenius:e}, max |x_ij| = {max_abs:e})")]
    EigenNonConvergence {
        n: usize,
        frobenius: f64,
        max_abs: f64,
    },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-finite value in {block} at iteration {iteration}")]
    NonFinite { block: &'static str, iteration: usize },

    #[error("inner solver failure: {0}")]
    InnerSolver(String),

    #[error("square root of indefinite cross product for groups ({group}, {other}): λ_min = {min_eig:e}")]
    IndefiniteSquareRoot {
        group: usize,
        other: usize,
        min_eig: f64,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
