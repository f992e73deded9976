//! Error type shared by all solver modules.

use thiserror::Error;

/// Library-wide error enum.
#[derive(Debug, Error)]
pub enum Error {
    /// A request violated an operation precondition (bad level, length
    /// mismatch, unsupported derivative order, ...).
    #[error("invalid request: {0}")]
    InvalidRequest(String),

    /// A coefficient failed its ellipticity or periodicity contract.
    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),

    /// An operator violated its contract (nonpositive diagonal,
    /// dimension mismatch, loss of symmetry).
    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    /// Non-finite values or a breakdown inside an iterative solver.
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    /// Computed quantities contradict an invariant that should hold if the
    /// solver worked (e.g. a clearly negative variance).
    #[error("inconsistent result: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
