use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not found: {0}")]
    NotFound(String),

    /// A factorization pivot vanished: the coefficient sits (numerically) on
    /// an eigenvalue of the mixed boundary value problem.
    #[error("eigenvalue proximity: {0}")]
    EigenvalueProximity(String),

    #[error("ill-conditioned basis: Gram condition number {0:.3e}")]
    IllConditionedBasis(f64),

    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("mesh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("objective evaluation failed at iteration {iteration}, particle {particle}: {source}")]
    Objective {
        iteration: usize,
        particle: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
