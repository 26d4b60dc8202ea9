use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The process has no red vertex left, so no transition is possible.
    #[error("no transition possible: the process has already fixated")]
    NoTransition,

    #[error("state space too large: n = {n} exceeds the cap of {cap}")]
    TooLarge { n: u64, cap: u64 },

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("quadrature did not converge: estimated error {error:e} after {intervals} intervals")]
    Quadrature { error: f64, intervals: usize },

    #[error("special function did not converge: {0}")]
    Convergence(&'static str),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
