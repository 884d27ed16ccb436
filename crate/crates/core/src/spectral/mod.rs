//! Eigensolvers, dipole weights, the reduced partition function and the
//! level-counting diagnostic.

mod eigen;
mod model;
mod weights;

pub use eigen::{eigensolve, eigensolve_with, lanczos, SolverOptions, SpectralResult};
pub use model::{
    Level, ModelSpectrum, SectorSpectrum, SpectrumOptions, StateSelection, Transition,
    DEGENERACY_TOL,
};
pub use weights::{
    dipole_weights, momentum_in_eigenbasis, reduced_partition, weyl_fit, DipoleWeights,
    PartitionFunction, WeylFit, WEYL_MIN_LEVELS,
};

use crate::many_body::ModelParams;

/// Excitation energy below which levels are insensitive to the mode cutoff:
/// half the kinetic energy of the first excluded mode.
pub fn truncation_clean_cutoff(params: &ModelParams) -> f64 {
    let k = params.geometry.mode_momentum(params.m_modes as i64 + 1);
    0.25 * k * k
}
