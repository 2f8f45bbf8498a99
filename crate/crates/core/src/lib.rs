//! Grid-free compressive beamforming for uniform (and masked) linear arrays.
//!
//! The crate estimates directions of arrival from narrowband array snapshots
//! without committing the sources to a grid: the sparse recovery problem is
//! solved over a continuum of steering atoms via its semidefinite dual, and the
//! support is read off the dual polynomial by rooting.  Classical baselines
//! (conventional beamforming, minimum-`l2`, grid-based basis pursuit, MVDR,
//! MUSIC and min-norm together with their root variants) are provided for
//! comparison under the same array model.
//!
//! Internally every direction is the sine of the arrival angle,
//! `t = sin(theta) ∈ [-1, 1]`; degrees only appear at presentation boundaries.

pub mod array;
pub mod atomic;
pub mod bpdn;
pub mod classical;
pub mod conic;
pub mod error;
pub mod rooting;
pub mod signal;

pub use array::ArrayGeometry;
pub use atomic::DualVector;
pub use error::{Error, Result};
pub use signal::{add_noise, synthesize, Snapshot, Source, SourceScene};
