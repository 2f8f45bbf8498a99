//! Library surface of the `beamcs` command-line tool.
//!
//! The binary in `main.rs` is a thin argument-parsing shell over these
//! modules; they are exposed as a library so integration tests can drive the
//! scenario, report and snapshot-file machinery directly.

pub mod error;
pub mod figures;
pub mod report;
pub mod run;
pub mod scenario;
pub mod snapshots;
pub mod svg;
