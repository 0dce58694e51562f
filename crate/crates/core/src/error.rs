//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors reported by state constructors, decompositions and the protocol.
///
/// Structural *negative verdicts* (a resource failing a capability test) are
/// not errors; they are ordinary return values. Errors are reserved for
/// malformed inputs: dimension mismatches, non-physical states, and
/// numerically impossible requests.
#[derive(Debug, Error)]
pub enum QutelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian: deviation {deviation:.3e} exceeds {tol:.1e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("rank-deficient input: smallest singular value {0:.3e}")]
    RankDeficient(f64),

    #[error("invalid measurement basis: {0}")]
    InvalidBasis(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("stale certificate: {0}")]
    StaleCertificate(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, QutelError>;
