use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} outside the window [{lo}, {hi}]")]
    OutOfWindow { index: i64, lo: i64, hi: i64 },

    #[error("empty sample")]
    EmptySample,

    #[error("quadrature did not converge")]
    Quadrature,

    #[error("atom matching failed: {0}")]
    Match(#[from] MatchError),

    #[error("jump counts above delta differ: {left} vs {right}")]
    JumpCountMismatch { left: usize, right: usize },

    #[error("matched jumps do not admit an increasing reparametrisation")]
    JumpMatchingFailed,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Failure modes of point-measure atom matching. Ambiguity (several discrete
/// candidates inside the tolerance box) is reported distinctly from absence.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("no discrete atom within tolerance of limit atom at ({location}, {weight})")]
    Missing { location: f64, weight: f64 },

    #[error("{candidates} discrete atoms within tolerance of limit atom at ({location}, {weight})")]
    Ambiguous {
        location: f64,
        weight: f64,
        candidates: usize,
    },

    #[error("atom counts in the window disagree: discrete {discrete}, limit {limit}")]
    CountMismatch { discrete: usize, limit: usize },
}
