//! Optical response of electrons confined to a periodic nanotube.
//!
//! The crate builds the many-body Hamiltonian of `N` spinless electrons on a
//! torus of `L` lattice periods, diagonalizes it, and evaluates the
//! Kohn-type conductivity of a weakly damped drive both from the spectrum and
//! by direct time integration.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod conductivity;
mod error;
pub mod kubo;
pub mod many_body;
pub mod potential;
pub mod special;
pub mod spectral;

pub use conductivity::{ConductivityCurve, LineSpectrum, OmegaGrid};
pub use error::{Error, Result};
pub use many_body::{ModelParams, SlaterBasis};
pub use potential::{CylinderGeometry, PairKernelTable, PeriodicPotentialSpec};
pub use spectral::{ModelSpectrum, SpectralResult};
