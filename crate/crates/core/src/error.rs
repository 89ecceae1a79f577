use thiserror::Error;

use crate::qmatrix::Party;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("eigenvalue {0:e} is below the PSD tolerance")]
    NegativeEigenvalue(f64),

    #[error("not a density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid projector set: {0}")]
    InvalidProjectors(String),

    #[error("invalid subsystem layout: {0}")]
    InvalidLayout(String),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("honest parties disagree on the final outcome (weight {0:e})")]
    HonestDisagreement(f64),

    #[error("honest run aborts with probability {0:e}")]
    HonestAbort(f64),

    #[error("honest run is not fair: P(0) = {0}")]
    Unfair(f64),

    #[error("intervention touches subsystem {subsystem} not owned by {party:?} after round {round}")]
    NotOwned {
        party: Party,
        subsystem: usize,
        round: usize,
    },

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("protocol shape not recognized: {0}")]
    UnsupportedShape(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Malformed input as opposed to well-formed input that violates an invariant.
    pub fn is_parse(&self) -> bool {
        matches!(self, Error::Parse(_) | Error::Json(_))
    }
}
