//! Frequency-domain conductivity: the β-independent leading term, its exact
//! finite-temperature counterpart, and the narrow-linewidth line spectrum.
//!
//! All functions take a [`ModelSpectrum`]; only level differences enter, so
//! a global energy shift leaves every output unchanged.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{ModelSpectrum, PartitionFunction};

/// Relative weight tail above which sums over the computed states are flagged.
pub const WEIGHT_TAIL_TOL: f64 = 1e-8;

fn check_drive(omega: f64, eta: f64) -> Result<()> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::invalid(format!("omega must be positive, got {omega}")));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    Ok(())
}

/// `F(Δ; ω, η)`, the transform of the drive profile against `Im e^{iΔτ}`.
/// Odd in `Δ`.
pub fn lorentzian_kernel(delta: f64, omega: f64, eta: f64) -> f64 {
    let e2 = eta * eta;
    let num = delta * (delta * delta + e2 - 3.0 * omega * omega);
    let den = ((delta - omega).powi(2) + e2) * ((delta + omega).powi(2) + e2);
    2.0 * eta / (omega * omega + e2) * num / den
}

fn lorentzian_kernel_c(delta: f64, omega: Complex64, eta: f64) -> Complex64 {
    let e2 = eta * eta;
    let w2 = omega * omega;
    let num = delta * (delta * delta + e2 - 3.0 * w2);
    let den = ((delta - omega).powi(2) + e2) * ((delta + omega).powi(2) + e2);
    2.0 * eta / (w2 + e2) * num / den
}

/// `e²/(m² S_L)` and `e² N/(m S_L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prefactors {
    pub absorptive: f64,
    pub drude: f64,
}

impl Prefactors {
    pub fn of(spec: &ModelSpectrum) -> Self {
        let e2 = spec.charge * spec.charge;
        Self {
            absorptive: e2 / (spec.mass * spec.mass * spec.surface),
            drude: e2 * spec.n_electrons as f64 / (spec.mass * spec.surface),
        }
    }
}

fn warn_tail(spec: &ModelSpectrum) {
    let tail = spec.weight_tail();
    let total: f64 = spec.transitions().iter().map(|t| t.weight).sum::<f64>() + tail;
    if total > 0.0 && tail > WEIGHT_TAIL_TOL * total {
        log::warn!("dipole weight tail {tail:e} exceeds {WEIGHT_TAIL_TOL:e} of the total {total:e}");
    }
}

/// Leading conductivity term written as the resonant double-Lorentzian sum
/// plus the bracket `N - (2/m) Σ ...`.
pub fn sigma_leading(spec: &ModelSpectrum, omega: f64, eta: f64) -> Result<f64> {
    check_drive(omega, eta)?;
    warn_tail(spec);
    let c = Prefactors::of(spec);
    let e2 = spec.charge * spec.charge;
    let m = spec.mass;
    let mut resonant = 0.0;
    let mut bracket = 0.0;
    for t in spec.transitions() {
        let d = t.delta;
        resonant += t.weight / (((d - omega).powi(2) + eta * eta) * ((d + omega).powi(2) + eta * eta));
        bracket += (d + 2.0 * omega) / ((d + omega).powi(2) + eta * eta) * t.weight;
    }
    let lor = eta / (omega * omega + eta * eta);
    Ok(4.0 * c.absorptive * omega * eta * resonant
        + e2 / (m * spec.surface) * lor * (spec.n_electrons as f64 - 2.0 / m * bracket))
}

/// The same quantity through the kernel `F`:
/// `-(e²/m²S) Σ_k F(μ_k-μ_0) w_k + (e²N/mS) η/(ω²+η²)`.
pub fn sigma_leading_kernel_form(spec: &ModelSpectrum, omega: f64, eta: f64) -> Result<f64> {
    check_drive(omega, eta)?;
    let c = Prefactors::of(spec);
    let s: f64 = spec
        .transitions()
        .iter()
        .map(|t| lorentzian_kernel(t.delta, omega, eta) * t.weight)
        .sum();
    Ok(-c.absorptive * s + c.drude * eta / (omega * omega + eta * eta))
}

/// Resonant sum restricted to states above the ground manifold. Zero when
/// momentum is conserved.
pub fn absorptive_sum(spec: &ModelSpectrum, omega: f64, eta: f64) -> Result<f64> {
    check_drive(omega, eta)?;
    let c = Prefactors::of(spec);
    let tol = spec.degeneracy_tol();
    let s: f64 = spec
        .transitions()
        .iter()
        .filter(|t| t.delta > tol)
        .map(|t| t.weight / (((t.delta - omega).powi(2) + eta * eta) * ((t.delta + omega).powi(2) + eta * eta)))
        .sum();
    Ok(4.0 * c.absorptive * omega * eta * s)
}

/// The bracketed second term of the leading conductivity, reported as is.
pub fn drude_bracket(spec: &ModelSpectrum, omega: f64, eta: f64) -> Result<f64> {
    check_drive(omega, eta)?;
    let e2 = spec.charge * spec.charge;
    let m = spec.mass;
    let s: f64 = spec
        .transitions()
        .iter()
        .map(|t| (t.delta + 2.0 * omega) / ((t.delta + omega).powi(2) + eta * eta) * t.weight)
        .sum();
    Ok(e2 / (m * spec.surface) * eta / (omega * omega + eta * eta) * (spec.n_electrons as f64 - 2.0 / m * s))
}

/// Finite-temperature conductivity with its thermal decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalConductivity {
    pub sigma: f64,
    /// β-independent leading term.
    pub leading: f64,
    /// `σ - leading`, summed directly over the excited states.
    pub thermal_shift: f64,
    /// `T⁽⁰⁾`: ground-manifold part of `Tr(R P)`.
    pub t0: f64,
    /// `T⁽¹⁾`: thermally excited part of `Tr(R P)`.
    pub t1: f64,
    pub partition: PartitionFunction,
}

/// Exact trace over the computed states,
/// `σ = (e²N/mS) η/(ω²+η²) - (e²/m²S)(1/Z̃) Σ_k e^{-β(μ_k-μ_0)} Σ_j F(μ_j-μ_k) w_jk`.
///
/// The difference to the leading term is accumulated directly from the
/// excited states so it stays accurate when it is far below the leading term.
pub fn sigma_finite_beta(spec: &ModelSpectrum, beta: f64, omega: f64, eta: f64) -> Result<ThermalConductivity> {
    check_drive(omega, eta)?;
    let partition = spec.partition(beta, 1e-12)?;
    let leading = sigma_leading_kernel_form(spec, omega, eta)?;
    let c = Prefactors::of(spec);
    let mu0 = spec.ground_energy();
    let tol = spec.degeneracy_tol();
    let ground = spec.ground_manifold();
    let d = ground.len() as f64;

    let row_sum = |s: usize, k: usize| -> f64 {
        let sec = &spec.sectors[s];
        let mu_k = sec.eigenvalues[k];
        sec.eigenvalues
            .iter()
            .enumerate()
            .map(|(j, &mu_j)| lorentzian_kernel(mu_j - mu_k, omega, eta) * sec.momentum[(j, k)].powi(2))
            .sum()
    };
    let ground_mean: f64 = spec
        .transitions()
        .iter()
        .map(|t| lorentzian_kernel(t.delta, omega, eta) * t.weight)
        .sum();

    let mut z = d;
    let mut excited = 0.0;
    let mut excited_full = 0.0;
    for (s, sec) in spec.sectors.iter().enumerate() {
        for (k, &mu) in sec.eigenvalues.iter().enumerate() {
            let delta = mu - mu0;
            if delta <= tol {
                continue;
            }
            let b = (-beta * delta).exp();
            if b == 0.0 {
                continue;
            }
            if !sec.complete() {
                log::warn!("thermal sum uses a truncated sector; row sums are incomplete");
            }
            let sk = row_sum(s, k);
            z += b;
            excited += b * (sk - ground_mean);
            excited_full += b * sk;
        }
    }
    let thermal_shift = -c.absorptive * excited / z;
    Ok(ThermalConductivity {
        sigma: leading + thermal_shift,
        leading,
        thermal_shift,
        t0: d * ground_mean / z,
        t1: excited_full / z,
        partition: PartitionFunction { value: z, ..partition },
    })
}

/// One δ-line of the zero-linewidth conductivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub omega: f64,
    /// `π e²/(m² S) w_k/ω_k`.
    pub amplitude: f64,
    pub k_index: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LineSpectrum {
    pub lines: Vec<Line>,
}

impl LineSpectrum {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "omega_k,amplitude,k_index,weight")?;
        for l in &self.lines {
            writeln!(w, "{:.16e},{:.16e},{},{:.16e}", l.omega, l.amplitude, l.k_index, l.weight)?;
        }
        Ok(())
    }
}

/// Lines at `μ_k - μ_0` for every state above the ground manifold carrying
/// weight above `threshold`. `k_index` is the position in the ascending level list.
pub fn line_spectrum(spec: &ModelSpectrum, threshold: f64) -> LineSpectrum {
    let c = Prefactors::of(spec);
    let tol = spec.degeneracy_tol();
    let lines = spec
        .transitions()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.delta > tol && t.weight > threshold)
        .map(|(k, t)| Line {
            omega: t.delta,
            amplitude: std::f64::consts::PI * c.absorptive * t.weight / t.delta,
            k_index: k,
            weight: t.weight,
        })
        .collect();
    LineSpectrum { lines }
}

/// Default linewidth ladder for peak studies, `{1e-1, 1e-2, 1e-3}` times the gap.
pub fn default_eta_ladder(gap: f64) -> [f64; 3] {
    [1e-1 * gap, 1e-2 * gap, 1e-3 * gap]
}

/// `dς/dω` by complex-step differentiation of the kernel form.
pub fn sigma_leading_slope(spec: &ModelSpectrum, omega: f64, eta: f64) -> Result<f64> {
    check_drive(omega, eta)?;
    let c = Prefactors::of(spec);
    let h = 1e-30 * omega.max(1.0);
    let w = Complex64::new(omega, h);
    let s: Complex64 = spec
        .transitions()
        .iter()
        .map(|t| lorentzian_kernel_c(t.delta, w, eta) * t.weight)
        .sum();
    let drude = c.drude * eta / (w * w + eta * eta);
    Ok((-c.absorptive * s + drude).im / h)
}

/// Local maximum of the leading term within `16 η` of `near`, located as the
/// root of its slope. Fails when the line is swamped by its neighbours or the
/// background.
pub fn find_peak(spec: &ModelSpectrum, eta: f64, near: f64) -> Result<f64> {
    check_drive(near, eta)?;
    let slope = |w: f64| sigma_leading_slope(spec, w, eta);
    // Expand a bracket with slope > 0 on the left and < 0 on the right.
    let mut half = 0.5 * eta;
    let (mut lo, mut hi) = loop {
        let lo = (near - half).max(0.5 * near);
        let hi = near + half;
        if slope(lo)? > 0.0 && slope(hi)? < 0.0 {
            break (lo, hi);
        }
        half *= 2.0;
        if half > 16.0 * eta {
            return Err(Error::NonConvergence {
                what: "peak bracket",
                detail: format!("no maximum within {near} ± {half}"),
            });
        }
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Angular-frequency grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OmegaGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Default for OmegaGrid {
    fn default() -> Self {
        Self {
            min: 0.05,
            max: 25.0,
            count: 200,
            spacing: Spacing::Linear,
        }
    }
}

impl OmegaGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0) {
            return Err(Error::invalid(format!("omega_grid.min must be > 0, got {}", self.min)));
        }
        if !(self.max >= self.min) || !self.max.is_finite() {
            return Err(Error::invalid("omega_grid.max must be finite and >= omega_grid.min"));
        }
        if self.count == 0 {
            return Err(Error::invalid("omega_grid.count must be >= 1"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let n = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let s = i as f64 / n;
                match self.spacing {
                    Spacing::Linear => self.min + s * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + s * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductivityCurve {
    pub omega_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub eta: f64,
    pub beta: Option<f64>,
    pub model_hash: String,
}

impl ConductivityCurve {
    /// Leading term (`beta = None`) or finite-temperature value on a grid.
    pub fn evaluate(
        spec: &ModelSpectrum,
        omega_grid: &[f64],
        eta: f64,
        beta: Option<f64>,
        model_hash: impl Into<String>,
    ) -> Result<Self> {
        let values = omega_grid
            .par_iter()
            .map(|&w| match beta {
                None => sigma_leading(spec, w, eta),
                Some(b) => sigma_finite_beta(spec, b, w, eta).map(|t| t.sigma),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            omega_grid: omega_grid.to_vec(),
            values,
            eta,
            beta,
            model_hash: model_hash.into(),
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "omega,sigma")?;
        for (o, s) in self.omega_grid.iter().zip(&self.values) {
            writeln!(w, "{o:.16e},{s:.16e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_basic() {
        assert_eq!(lorentzian_kernel(0.0, 0.7, 0.05), 0.0);
        for &d in &[0.1, 1.3, 4.0] {
            assert_eq!(lorentzian_kernel(-d, 0.7, 0.05), -lorentzian_kernel(d, 0.7, 0.05));
        }
    }

    #[test]
    fn grid_points() {
        let g = OmegaGrid {
            min: 0.1,
            max: 10.0,
            count: 3,
            spacing: Spacing::Log,
        };
        let p = g.points();
        assert!((p[1] - 1.0).abs() < 1e-14);
        assert!(OmegaGrid { min: 0.0, ..g }.validate().is_err());
    }
}
