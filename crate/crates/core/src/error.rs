use thiserror::Error;

/// Errors raised by the solver, the evolver, the checks and the CLI plumbing.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument left the validity domain of a deformation function.
    #[error("{what}: argument {value} outside the valid domain (limit {limit})")]
    Domain {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("wavefunction has (numerically) zero norm")]
    ZeroField,

    #[error("support error: {0}")]
    Support(String),

    #[error("wavevector {k} is not commensurate with a periodic box of length {length}")]
    Commensurability { k: f64, length: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("phase unwrapping crossed a node of |psi| at grid index {index}")]
    Node { index: usize },

    #[error("time step rejected by stability guard: {0}")]
    Stability(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("evolution stopped at step {step}: {source}")]
    Interrupted {
        step: usize,
        #[source]
        source: Box<Error>,
        partial: Box<crate::evolution::Trajectory>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
