//! CLI-level error type mapping failures to process exit codes.
//!
//! The contract is small: configuration problems (bad scenario files, missing
//! mandatory parameters, malformed CSV) exit with code 2, numerical failures
//! inside an estimator exit with code 3, and I/O trouble exits with code 1.

use std::fmt;

/// Anything that can abort a CLI run, tagged with how the process should exit.
#[derive(Debug)]
pub enum CliError {
    /// User-supplied configuration is invalid: unparseable scenario, missing
    /// required flag, inconsistent fields, malformed input file.  Exit 2.
    Config(String),
    /// An estimator ran but failed numerically (solver divergence, singular
    /// system, infeasible constraint set).  Exit 3.
    Solver(String),
    /// Filesystem or serialization trouble unrelated to the numerics.  Exit 1.
    Io(String),
}

impl CliError {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Solver(msg) => write!(f, "solver error: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<beamcs::Error> for CliError {
    fn from(err: beamcs::Error) -> Self {
        match err {
            // Domain errors are bad inputs the user can fix.
            beamcs::Error::Domain(msg) => CliError::Config(msg),
            // Everything else happened inside the numerics.
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        // serde_json errors out of `to_string` are I/O-ish, but in practice we
        // only see them while *parsing* user files, which is a config problem.
        CliError::Config(err.to_string())
    }
}

/// Shorthand used throughout the CLI crates.
pub type CliResult<T> = Result<T, CliError>;
