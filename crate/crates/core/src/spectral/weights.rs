use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::eigen::SpectralResult;
use crate::error::{Error, Result};
use crate::many_body::DiagonalOperator;

/// Squared momentum matrix elements between computed eigenstates.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleWeights {
    /// `w_k = |⟨ψ_k, P ψ_0⟩|²`.
    pub w: Vec<f64>,
    /// `w_jk = |⟨ψ_j, P ψ_k⟩|²`.
    pub matrix: DMatrix<f64>,
}

/// `⟨ψ_j, P ψ_k⟩` for a diagonal `P`.
pub fn momentum_in_eigenbasis(res: &SpectralResult, p: &DiagonalOperator) -> Result<DMatrix<f64>> {
    let psi = &res.eigenvectors;
    if psi.nrows() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.nrows(),
            got: p.dim(),
        });
    }
    let mut scaled = psi.clone();
    for (r, &d) in p.entries().iter().enumerate() {
        scaled.row_mut(r).scale_mut(d);
    }
    Ok(psi.transpose() * scaled)
}

pub fn dipole_weights(res: &SpectralResult, p: &DiagonalOperator) -> Result<DipoleWeights> {
    if res.n_converged < 1 {
        return Err(Error::InsufficientData("no converged eigenpair".into()));
    }
    let m = momentum_in_eigenbasis(res, p)?;
    let matrix = m.map(|x| x * x);
    let w = matrix.column(0).iter().copied().collect();
    Ok(DipoleWeights { w, matrix })
}

/// `Z̃ = Σ_k exp(-β(μ_k - μ_0))` with a flag when the highest computed level
/// still carries Boltzmann weight above `tail_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionFunction {
    pub value: f64,
    /// `exp(-β(μ_last - μ_0))`.
    pub tail: f64,
    pub truncated: bool,
}

pub fn reduced_partition(eigenvalues: &[f64], beta: f64, tail_tol: f64) -> Result<PartitionFunction> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    let Some(&mu0) = eigenvalues.iter().min_by(|a, b| a.total_cmp(b)) else {
        return Err(Error::InsufficientData("empty spectrum".into()));
    };
    let top = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let value = eigenvalues.iter().map(|&mu| (-beta * (mu - mu0)).exp()).sum();
    let tail = (-beta * (top - mu0)).exp();
    let truncated = tail > tail_tol;
    if truncated {
        log::warn!("partition function tail e^(-β(μ_last-μ_0)) = {tail:e} exceeds {tail_tol:e}");
    }
    Ok(PartitionFunction {
        value,
        tail,
        truncated,
    })
}

/// Power law `μ_k - μ_0 ≈ C₀ k^p` fitted on a window of levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Level indices `[first, last]` entering the fit.
    pub window: (usize, usize),
    /// Excitation energy bounding the truncation-clean window.
    pub clean_below: f64,
}

/// Minimum number of clean levels required by [`weyl_fit`].
pub const WEYL_MIN_LEVELS: usize = 50;

/// Least-squares fit of `ln(μ_k - μ_0)` against `ln k` over the upper half of
/// the levels with `μ_k - μ_0 <= clean_below`.
pub fn weyl_fit(eigenvalues: &[f64], clean_below: f64) -> Result<WeylFit> {
    let mut mu: Vec<f64> = eigenvalues.to_vec();
    mu.sort_by(f64::total_cmp);
    let Some(&mu0) = mu.first() else {
        return Err(Error::InsufficientData("empty spectrum".into()));
    };
    let clean = mu.iter().take_while(|&&m| m - mu0 <= clean_below).count();
    if clean < WEYL_MIN_LEVELS {
        return Err(Error::InsufficientData(format!(
            "{clean} levels below the clean cutoff, need {WEYL_MIN_LEVELS}"
        )));
    }
    let first = clean / 2;
    let points: Vec<(f64, f64)> = (first..clean)
        .filter(|&k| k > 0 && mu[k] - mu0 > 0.0)
        .map(|k| ((k as f64).ln(), (mu[k] - mu0).ln()))
        .collect();
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / n, sy / n);
    let (sxx, sxy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx).powi(2), b + (p.0 - mx) * (p.1 - my)));
    let exponent = sxy / sxx;
    let prefactor = (my - exponent * mx).exp();
    Ok(WeylFit {
        exponent,
        prefactor,
        window: (first, clean - 1),
        clean_below,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_partition() {
        let z = reduced_partition(&[0.3, 1.3], 2.0, 1e-12).unwrap();
        assert!((z.value - (1.0 + (-2.0f64).exp())).abs() < 1e-15);
        assert!(z.truncated);
        let big = reduced_partition(&[0.0, 1.0], 1e3, 1e-12).unwrap();
        assert_eq!(big.value, 1.0);
        assert!(!big.truncated);
        assert!(reduced_partition(&[0.0], -1.0, 1e-12).is_err());
    }

    #[test]
    fn weyl_exact_power() {
        let mu: Vec<f64> = (0..200).map(|k| 3.0 + 0.5 * (k as f64).powf(1.5)).collect();
        let fit = weyl_fit(&mu, f64::INFINITY).unwrap();
        assert!((fit.exponent - 1.5).abs() < 1e-10);
        assert!((fit.prefactor - 0.5).abs() < 1e-9);
        assert!(weyl_fit(&mu[..20], f64::INFINITY).is_err());
    }
}
