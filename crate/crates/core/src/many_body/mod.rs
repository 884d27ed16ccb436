//! Spinless `N`-fermion model on the torus in a plane-wave Slater basis.
//!
//! Mode `n ∈ [-M, M]` carries momentum `2πn/(La)`. A configuration is stored as
//! a bitmask with bit `n + M` set when mode `n` is occupied; fermionic signs
//! follow the ordering `c†_{n1} c†_{n2} … |0⟩` with `n1 < n2 < …`.

mod basis;
mod hamiltonian;

pub use basis::{build_basis, build_sector_bases, Sector, SlaterBasis, SlaterConfig};
pub use hamiltonian::{assemble_hamiltonian, momentum_operator, DiagonalOperator, HamiltonianMatrix};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{CylinderGeometry, PeriodicPotentialSpec};

/// Largest mode cutoff representable by the `u128` occupation masks.
pub const MAX_MODE_CUTOFF: usize = 63;

/// Default limit on the number of enumerated configurations.
pub const DEFAULT_BASIS_BUDGET: u128 = 50_000_000;

/// Physical model: geometry, particle number, coupling, lattice potential and
/// the single-particle momentum cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub geometry: CylinderGeometry,
    pub n_electrons: usize,
    pub lambda: f64,
    #[serde(default)]
    pub v_per: PeriodicPotentialSpec,
    pub m_modes: usize,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.v_per.validate()?;
        if self.n_electrons < 1 {
            return Err(Error::invalid("need at least one electron"));
        }
        if self.m_modes < 1 || self.m_modes > MAX_MODE_CUTOFF {
            return Err(Error::invalid(format!(
                "m_modes must lie in 1..={MAX_MODE_CUTOFF}, got {}",
                self.m_modes
            )));
        }
        if self.n_electrons > self.n_modes() {
            return Err(Error::invalid(format!(
                "{} fermions do not fit into {} modes (need N <= 2M+1)",
                self.n_electrons,
                self.n_modes()
            )));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!("coupling must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }

    /// Number of single-particle modes, `2M + 1`.
    pub fn n_modes(&self) -> usize {
        2 * self.m_modes + 1
    }

    /// Modulus under which `H` conserves `Σ n`, or `None` when it is conserved exactly.
    ///
    /// A harmonic `j` of the lattice potential shifts `Σ n` by `±jL`, so the
    /// conserved quantity is `Σ n mod (L·gcd(j))`.
    pub fn momentum_modulus(&self) -> Option<i64> {
        let g = self
            .v_per
            .harmonics()
            .keys()
            .filter(|&&j| j != 0)
            .fold(0u64, |acc, &j| gcd(acc, j));
        (g != 0).then(|| (g * self.geometry.cells as u64) as i64)
    }

    /// Copy with another mode cutoff.
    pub fn with_modes(&self, m_modes: usize) -> Self {
        Self {
            m_modes,
            ..self.clone()
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Electron count from lattice data, `N = L · (2πr/b) · n0`, rounded.
///
/// Returns the rounded count and the distance of the raw value from it.
pub fn electrons_from_lattice(
    cells: usize,
    radius: f64,
    bond_length: f64,
    ions_per_polygon: f64,
) -> Result<(usize, f64)> {
    if !(bond_length > 0.0) || !(radius > 0.0) || !(ions_per_polygon > 0.0) {
        return Err(Error::invalid("lattice data must be positive"));
    }
    let raw = cells as f64 * 2.0 * std::f64::consts::PI * radius / bond_length * ions_per_polygon;
    let n = raw.round();
    if n < 1.0 {
        return Err(Error::invalid(format!("lattice data give N = {raw}")));
    }
    let defect = (raw - n).abs();
    if defect > 1e-9 {
        log::warn!("lattice data give non-integral N = {raw}; using {n}");
    }
    Ok((n as usize, defect))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams {
            geometry: CylinderGeometry::new(0.2, 1.0, 4).unwrap(),
            n_electrons: 2,
            lambda: 1.0,
            v_per: PeriodicPotentialSpec::single_harmonic(0.5),
            m_modes: 6,
        }
    }

    #[test]
    fn validation() {
        assert!(params().validate().is_ok());
        let mut p = params();
        p.n_electrons = 14;
        assert!(p.validate().is_err());
        let mut p = params();
        p.lambda = -1.0;
        assert!(p.validate().is_err());
        assert!(params().with_modes(64).validate().is_err());
    }

    #[test]
    fn modulus() {
        assert_eq!(params().momentum_modulus(), Some(4));
        let mut p = params();
        p.v_per = PeriodicPotentialSpec::free();
        assert_eq!(p.momentum_modulus(), None);
        p.v_per.fourier_coeffs.insert(2, 0.1);
        p.v_per.fourier_coeffs.insert(-4, 0.1);
        assert_eq!(p.momentum_modulus(), Some(8));
    }

    #[test]
    fn lattice_count() {
        let (n, d) = electrons_from_lattice(4, 0.5, std::f64::consts::PI, 1.0).unwrap();
        assert_eq!(n, 4);
        assert!(d < 1e-12);
        let (n, d) = electrons_from_lattice(3, 0.2, 1.0, 1.0).unwrap();
        assert_eq!(n, 4);
        assert!(d > 0.1);
    }
}
