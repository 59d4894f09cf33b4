//! Measurement-based quantum computation on symmetry-protected topological
//! matrix product states.
//!
//! Modules:
//! - [`algebra`]: matrices, channels, superoperator spectra, Lie closure.
//! - [`cohomology`]: finite abelian groups, cocycles, Weyl projective irreps.
//! - [`mps`]: SPT tensors, transfer channels, fixed points, blocking.
//! - [`mbqc`]: virtual-space simulation, calibration, gate compilation,
//!   trajectories and readout.
//! - [`lie`]: grid filling and the brute-force closure oracle.
//! - [`serialize`]: versioned JSON documents.
//! - [`exec`]: sequential or rayon-backed data-parallel maps.

pub mod algebra;
pub mod cohomology;
pub mod error;
pub mod exec;
pub mod lie;
pub mod mbqc;
pub mod mps;
pub mod serialize;

pub use error::{Error, Result};
pub use exec::Execution;
