//! Crate-wide error type.
//!
//! Every fallible operation returns [`Error`]; the variants distinguish bad
//! inputs (domain violations, parse-level misuse) from numerical failures
//! (singular systems, non-converged iterations) so callers can map them onto
//! exit codes or retries without string matching.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the beamforming library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument was outside its documented domain (sizes, ranges, NaN).
    #[error("domain error: {0}")]
    Domain(String),

    /// A signal-dependent quantity degenerated (zero signal with finite SNR,
    /// identically-zero polynomial, empty snapshot set, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A linear system or matrix factorization was singular or numerically
    /// rank deficient.
    #[error("singular system: {0}")]
    Singular(String),

    /// An iterative routine exhausted its iteration budget before reaching
    /// the requested tolerance.
    #[error("{routine} did not converge within {iterations} iterations")]
    NonConvergence {
        /// Which routine stalled.
        routine: &'static str,
        /// The iteration budget that was exhausted.
        iterations: usize,
    },

    /// The conic solver established that the problem has no feasible point.
    #[error("conic problem is infeasible")]
    Infeasible,

    /// The conic solver failed in a way that leaves no usable iterate.
    #[error("conic solver failure: {0}")]
    SolverFailure(String),

    /// Fewer unit-circle roots than requested sources.
    #[error("found {found} candidate roots but {requested} sources were requested")]
    InsufficientRoots {
        /// Candidates surviving the unit-circle filter.
        found: usize,
        /// Number of sources asked for.
        requested: usize,
    },
}
