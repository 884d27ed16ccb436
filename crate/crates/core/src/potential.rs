//! Coulomb interaction on the tube surface and its one-dimensional reductions.
//!
//! Units: `ħ = m_e = 1`; the electrostatic prefactor `e²/ε` is carried by
//! [`CylinderGeometry::coupling`] and is 1 by default. A length `x` runs along
//! the tube, an arc length `y` around it.
//!
//! Kernels provided:
//! - `V_r(x, y)`: the 3D Coulomb potential restricted to the cylinder;
//! - its longitudinal Fourier transform (a `K0` Bessel function);
//! - the `La`-periodized version `V_{L,r}` (Fourier route and real-space
//!   image route);
//! - the circle projections `v_per`, `v_r` (closed form through the complete
//!   elliptic integral) and `v_{L,r}` (through its Fourier coefficients).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{bessel_k0, elliptic_k_complement, quad_log_singular, QuadSpec};

/// Fourier truncation accuracy used when the caller does not choose one.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// Geometry of the tube and the torus it is wrapped on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderGeometry {
    /// Tube radius `r`.
    pub radius: f64,
    /// Longitudinal lattice period `a`.
    pub period: f64,
    /// Number of periods `L` on the torus; the torus length is `L·a`.
    pub cells: usize,
    /// Relative permittivity `ε`.
    #[serde(default = "one")]
    pub permittivity: f64,
    /// Elementary charge `e`.
    #[serde(default = "one")]
    pub charge: f64,
}

fn one() -> f64 {
    1.0
}

impl CylinderGeometry {
    pub fn new(radius: f64, period: f64, cells: usize) -> Result<Self> {
        let g = Self {
            radius,
            period,
            cells,
            permittivity: 1.0,
            charge: 1.0,
        };
        g.validate()?;
        Ok(g)
    }

    /// Checks `0 < 2√2 r < a`, `L >= 1` and `ε > 0`.
    pub fn validate(&self) -> Result<()> {
        let r = self.radius;
        let a = self.period;
        if !(r.is_finite() && a.is_finite()) || !(r > 0.0) {
            return Err(Error::invalid(format!("radius must be positive, got r = {r}")));
        }
        if !(2.0 * 2f64.sqrt() * r < a) {
            return Err(Error::invalid(format!(
                "geometry violates 0 < 2*sqrt(2)*r < a (r = {r}, a = {a})"
            )));
        }
        if self.cells < 1 {
            return Err(Error::invalid("torus must hold at least one period (L >= 1)"));
        }
        if !(self.permittivity > 0.0) || !self.permittivity.is_finite() {
            return Err(Error::invalid("permittivity must be positive"));
        }
        if !self.charge.is_finite() || self.charge == 0.0 {
            return Err(Error::invalid("charge must be finite and nonzero"));
        }
        Ok(())
    }

    /// Torus length `L·a`.
    pub fn torus_length(&self) -> f64 {
        self.cells as f64 * self.period
    }

    /// `e²/ε`.
    pub fn coupling(&self) -> f64 {
        self.charge * self.charge / self.permittivity
    }

    /// Tube surface on the torus, `2π r L a`.
    pub fn surface(&self) -> f64 {
        2.0 * PI * self.radius * self.torus_length()
    }

    /// Momentum of plane-wave mode `n`, `2πn/(La)`.
    pub fn mode_momentum(&self, n: i64) -> f64 {
        2.0 * PI * n as f64 / self.torus_length()
    }

    /// Chord length `2r|sin(y/2r)|` between two points at arc distance `y`.
    fn chord(&self, y: f64) -> f64 {
        2.0 * self.radius * (0.5 * y / self.radius).sin().abs()
    }
}

/// Circumference-averaged ion potential `v_per(x) = Σ_j c_j cos(2π j x / a)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPotentialSpec {
    /// Harmonic index `j` (period `a`) to cosine coefficient `c_j`.
    pub fourier_coeffs: BTreeMap<i64, f64>,
}

impl PeriodicPotentialSpec {
    pub fn free() -> Self {
        Self::default()
    }

    /// `v0 · cos(2πx/a)`.
    pub fn single_harmonic(v0: f64) -> Self {
        let mut fourier_coeffs = BTreeMap::new();
        fourier_coeffs.insert(1, v0);
        Self { fourier_coeffs }
    }

    /// Coefficients folded onto `j >= 0` (`cos` is even), zeros dropped.
    pub fn harmonics(&self) -> BTreeMap<u64, f64> {
        let mut out = BTreeMap::new();
        for (&j, &c) in &self.fourier_coeffs {
            *out.entry(j.unsigned_abs()).or_insert(0.0) += c;
        }
        out.retain(|_, c| *c != 0.0);
        out
    }

    /// True when no harmonic with `j != 0` is present (translation invariant).
    pub fn is_translation_invariant(&self) -> bool {
        self.harmonics().keys().all(|&j| j == 0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fourier_coeffs.values().any(|c| !c.is_finite()) {
            return Err(Error::invalid("periodic potential coefficients must be finite"));
        }
        Ok(())
    }
}

/// `v_per(x)` for lattice period `a`.
pub fn v_per_eval(x: f64, spec: &PeriodicPotentialSpec, period: f64) -> f64 {
    spec.fourier_coeffs
        .iter()
        .map(|(&j, &c)| c * (2.0 * PI * j as f64 * x / period).cos())
        .sum()
}

/// `V_r(x, y) = e² / (ε sqrt(x² + 4r² sin²(y/2r)))`.
pub fn coulomb_on_cylinder(x: f64, y: f64, geom: &CylinderGeometry) -> Result<f64> {
    let rho2 = x * x + geom.chord(y).powi(2);
    if !(rho2 > 0.0) {
        return Err(Error::domain(
            "coulomb_on_cylinder",
            format!("coincident points (x, y) = ({x}, {y})"),
        ));
    }
    Ok(geom.coupling() / rho2.sqrt())
}

/// Longitudinal Fourier transform `sqrt(2/π) e²/ε K0(2r|p sin(y/2r)|)`.
pub fn coulomb_ft(p: f64, y: f64, geom: &CylinderGeometry) -> Result<f64> {
    let arg = p.abs() * geom.chord(y);
    if p == 0.0 || !(arg > 0.0) {
        return Err(Error::domain(
            "coulomb_ft",
            format!("transform undefined at p = {p}, y = {y}"),
        ));
    }
    Ok((2.0 / PI).sqrt() * geom.coupling() * bessel_k0(arg)?)
}

/// Geometric bound on the Fourier tail of the periodized kernel beyond mode `m_fourier`.
///
/// Uses that `K0(u) e^u` is decreasing, so `K0(u + t) <= K0(u) e^{-t}`.
fn periodized_tail_bound(c: f64, geom: &CylinderGeometry, m_fourier: usize) -> Result<f64> {
    let t = geom.torus_length();
    let step = 2.0 * PI * c / t;
    let first = bessel_k0(step * (m_fourier as f64 + 1.0))?;
    Ok(geom.coupling() * (4.0 / t) * first / (1.0 - (-step).exp()))
}

/// Smallest Fourier cutoff whose certified tail for `V_{L,r}(·, y)` is below `tol`.
pub fn fourier_cutoff(y: f64, geom: &CylinderGeometry, tol: f64) -> Result<usize> {
    let c = geom.chord(y);
    if !(c > 0.0) {
        return Err(Error::domain("fourier_cutoff", "y must not be a multiple of 2πr"));
    }
    let mut m = 1usize;
    while periodized_tail_bound(c, geom, m)? > tol {
        m = m.checked_mul(2).ok_or_else(|| Error::invalid("cutoff overflow"))?;
        if m > 1 << 40 {
            return Err(Error::Tolerance {
                what: "periodized Coulomb cutoff",
                bound: f64::INFINITY,
                requested: tol,
            });
        }
    }
    // Bisect down to the smallest admissible cutoff.
    let (mut lo, mut hi) = (m / 2, m);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if periodized_tail_bound(c, geom, mid)? > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Periodized pair potential `V_{L,r}(x, y)` from its Fourier series, truncated
/// at `|m| <= m_fourier`, plus the mean of `V_r(·, y)` over one torus cell.
///
/// Fails with [`Error::Tolerance`] when the certified tail exceeds `tol`.
pub fn periodized_coulomb(
    x: f64,
    y: f64,
    geom: &CylinderGeometry,
    m_fourier: usize,
    tol: f64,
) -> Result<f64> {
    let c = geom.chord(y);
    if !(c > 0.0) {
        return Err(Error::domain(
            "periodized_coulomb",
            "y must not be a multiple of 2πr",
        ));
    }
    let bound = periodized_tail_bound(c, geom, m_fourier)?;
    if bound > tol {
        return Err(Error::Tolerance {
            what: "periodized Coulomb Fourier series",
            bound,
            requested: tol,
        });
    }
    let t = geom.torus_length();
    let mut sum = 0.0;
    // Smallest terms first.
    for m in (1..=m_fourier).rev() {
        let k = 2.0 * PI * m as f64 / t;
        sum += (k * x).cos() * bessel_k0(k * c)?;
    }
    let mean = (2.0 / t) * (0.5 * t / c).asinh();
    Ok(geom.coupling() * ((4.0 / t) * sum + mean))
}

/// `asinh(u) - asinh(v)` for `u > v`, without cancellation when both are large.
fn asinh_difference(u: f64, v: f64) -> f64 {
    if v < 0.0 {
        return u.asinh() - v.asinh();
    }
    let su = (1.0 + u * u).sqrt();
    let sv = (1.0 + v * v).sqrt();
    let num = (u - v) * (1.0 + (u + v) / (su + sv));
    (num / (v + sv)).ln_1p()
}

/// Same kernel as [`periodized_coulomb`], evaluated by real-space image
/// summation: the central term plus each image `V_r(x + nLa, y)`, `n != 0`,
/// minus its own cell average. Converges for every `y`, including `y → 0`.
pub fn periodized_coulomb_images(x: f64, y: f64, geom: &CylinderGeometry) -> Result<f64> {
    const IMAGES: usize = 2000;
    let c = geom.chord(y);
    let t = geom.torus_length();
    let xr = x - t * (x / t).round();
    if !(xr * xr + c * c > 0.0) {
        return Err(Error::domain(
            "periodized_coulomb_images",
            "coincident points on the torus",
        ));
    }
    let f = |s: f64| 1.0 / (s * s + c * c).sqrt();
    let cell_mean = |centre: f64| {
        let (hi, lo) = ((centre + 0.5 * t) / c, (centre - 0.5 * t) / c);
        if c > 0.0 {
            asinh_difference(hi, lo) / t
        } else {
            ((centre + 0.5 * t) / (centre - 0.5 * t)).ln() / t
        }
    };
    let mut pairs = 0.0;
    for n in (1..=IMAGES).rev() {
        let shift = n as f64 * t;
        pairs += f(xr + shift) + f(xr - shift) - 2.0 * cell_mean(shift);
    }
    // Remaining pairs behave as (2/(T n³)) (x²/T² - 1/12).
    let nf = IMAGES as f64;
    let zeta_tail = 0.5 / (nf * nf) - 0.5 / (nf * nf * nf) + 0.25 / (nf * nf * nf * nf);
    let tail = (2.0 / t) * (xr * xr / (t * t) - 1.0 / 12.0) * zeta_tail;
    Ok(geom.coupling() * (f(xr) + pairs + tail))
}

/// Closed form of the circle projection,
/// `v_r(x) = (2/π) (e²/ε) K(4r²/(x²+4r²)) / sqrt(x² + 4r²)`.
pub fn v_r_eval(x: f64, geom: &CylinderGeometry) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::domain("v_r_eval", format!("need finite x != 0, got {x}")));
    }
    let r2 = 4.0 * geom.radius * geom.radius;
    let d2 = x * x + r2;
    let complement = x * x / d2;
    let k = elliptic_k_complement(complement)?;
    Ok(2.0 / PI * geom.coupling() * k / d2.sqrt())
}

/// Circle projection `(1/2πr) ∫ V(x, y) dy` of an arbitrary cylinder kernel,
/// using evenness in `y`.
pub fn project_onto_circle<F>(kernel: F, geom: &CylinderGeometry, spec: &QuadSpec) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let r = geom.radius;
    let integral = quad_log_singular(
        |y| kernel(y).unwrap_or(f64::NAN),
        0.0,
        PI * r,
        0.0,
        spec,
    )?;
    Ok(integral / (PI * r))
}

fn kernel_quad_spec() -> QuadSpec {
    QuadSpec {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_subdivisions: 4000,
    }
}

/// Fourier coefficient `ṽ_m` of `v_{L,r}` on the torus, normalised so that
/// `v_{L,r}(x) = Σ_m ṽ_m e^{i 2π m x / (La)}`.
///
/// For `m != 0` this is `(sqrt(2π)/La) v̂_r(2πm/La)` with
/// `v̂_r(p) = sqrt(2/π) (e²/ε) (1/2π) ∫_{-π}^{π} K0(2r|p sin(y/2)|) dy`;
/// for `m = 0` it is the cell mean of `v_r`.
pub fn pair_fourier_coeff(m: i64, geom: &CylinderGeometry) -> Result<f64> {
    let t = geom.torus_length();
    let spec = kernel_quad_spec();
    if m == 0 {
        let integral = quad_log_singular(
            |x| v_r_eval(x, geom).unwrap_or(f64::NAN),
            0.0,
            0.5 * t,
            0.0,
            &spec,
        )?;
        return Ok(2.0 / t * integral);
    }
    let z = geom.radius * (2.0 * PI * m.unsigned_abs() as f64 / t);
    let integral = quad_log_singular(
        |y| bessel_k0(2.0 * z * (0.5 * y).sin()).unwrap_or(f64::NAN),
        0.0,
        PI,
        0.0,
        &spec,
    )?;
    Ok(geom.coupling() * 2.0 / (PI * t) * integral)
}

/// Tabulated Fourier coefficients `ṽ_m`, `|m| <= m_max`, of the projected
/// periodized kernel. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairKernelTable {
    pub geometry: CylinderGeometry,
    /// `ṽ_m` for `m = 0..=m_max`; negative `m` mirror these.
    coeffs: Vec<f64>,
}

impl PairKernelTable {
    pub fn build(geometry: &CylinderGeometry, m_max: usize) -> Result<Self> {
        geometry.validate()?;
        let coeffs = (0..=m_max as i64)
            .into_par_iter()
            .map(|m| pair_fourier_coeff(m, geometry))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            geometry: *geometry,
            coeffs,
        })
    }

    /// Build from externally supplied coefficients `ṽ_0..ṽ_{m_max}`.
    pub fn from_coefficients(geometry: &CylinderGeometry, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("kernel coefficients must be finite and non-empty"));
        }
        Ok(Self {
            geometry: *geometry,
            coeffs,
        })
    }

    pub fn m_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// The `m = 0` value, the cell mean of `v_r`.
    pub fn mean_term(&self) -> f64 {
        self.coeffs[0]
    }

    /// `ṽ_m`; zero beyond the tabulated range.
    pub fn coeff(&self, m: i64) -> f64 {
        self.coeffs
            .get(m.unsigned_abs() as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// The table with a constant added to the kernel (only `ṽ_0` moves).
    pub fn shifted(&self, constant: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += constant;
        out
    }

    /// Large-`m` asymptote of `ṽ_m`, `(e²/ε) / (2π r |m|)`.
    fn leading_asymptote(&self, m: usize) -> f64 {
        self.geometry.coupling() / (2.0 * PI * self.geometry.radius * m as f64)
    }

    /// Certified bound on the synthesis error of [`Self::synthesize`]; infinite
    /// when the table is too short for the bound to apply.
    pub fn synthesis_bound(&self) -> f64 {
        let g = &self.geometry;
        let t = g.torus_length();
        let m = self.m_max();
        let z_next = g.radius * 2.0 * PI * (m as f64 + 1.0) / t;
        if z_next < 1.0 || m == 0 {
            return f64::INFINITY;
        }
        // For z >= 1: 0 <= I0(z)K0(z) - 1/(2z) <= 1/(8 z³), and Σ_{n>m} n⁻³ <= 1/(2m²).
        let scale = t / (2.0 * PI * g.radius);
        g.coupling() * (4.0 / t) * 0.125 * scale.powi(3) * 0.5 / (m as f64).powi(2)
    }

    /// `v_{L,r}(x)` from the tabulated coefficients. The slowly decaying
    /// `1/|m|` part of the series is summed in closed form
    /// (`Σ_{m>=1} cos(mθ)/m = -ln|2 sin(θ/2)|`), so only the fast remainder is
    /// truncated. Diverges logarithmically at `x ≡ 0 (mod La)`.
    pub fn synthesize(&self, x: f64) -> Result<f64> {
        let t = self.geometry.torus_length();
        let theta = 2.0 * PI * x / t;
        let half_sine = (0.5 * theta).sin().abs();
        if !(half_sine > 0.0) {
            return Err(Error::domain(
                "v_L synthesis",
                "kernel diverges logarithmically at x ≡ 0 (mod La)",
            ));
        }
        let lead = self.geometry.coupling() / (PI * self.geometry.radius);
        let mut remainder = 0.0;
        for m in (1..=self.m_max()).rev() {
            remainder += (self.coeffs[m] - self.leading_asymptote(m)) * (m as f64 * theta).cos();
        }
        Ok(self.coeffs[0] + 2.0 * remainder - lead * (2.0 * half_sine).ln())
    }

    /// Plain truncated series `Σ_{|m|<=m_max} ṽ_m e^{i2πmx/La}`, finite everywhere.
    pub fn truncated_series(&self, x: f64) -> f64 {
        let theta = 2.0 * PI * x / self.geometry.torus_length();
        let mut s = 0.0;
        for m in (1..=self.m_max()).rev() {
            s += self.coeffs[m] * (m as f64 * theta).cos();
        }
        self.coeffs[0] + 2.0 * s
    }

    /// `‖v_{L,r}‖_{L²(T_{La})}` by Parseval, with the `1/m²` tail of the
    /// squared coefficients summed from their asymptote.
    pub fn l2_norm(&self) -> f64 {
        let t = self.geometry.torus_length();
        let m = self.m_max();
        let mut s = self.coeffs[0].powi(2);
        for c in &self.coeffs[1..] {
            s += 2.0 * c * c;
        }
        let a = self.geometry.coupling() / (2.0 * PI * self.geometry.radius);
        s += 2.0 * a * a / (m as f64 + 0.5);
        (t * s).sqrt()
    }

    /// Writes `m,coeff` rows for `m = -m_max..=m_max`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "m,coeff")?;
        let mm = self.m_max() as i64;
        for m in -mm..=mm {
            writeln!(w, "{},{:.16e}", m, self.coeff(m))?;
        }
        Ok(())
    }
}

/// `v_{L,r}(x)` by Fourier synthesis with `m_fourier` tabulated coefficients;
/// fails when the certified synthesis error exceeds `tol`.
pub fn v_l_eval(x: f64, geom: &CylinderGeometry, m_fourier: usize, tol: f64) -> Result<f64> {
    let table = PairKernelTable::build(geom, m_fourier)?;
    let bound = table.synthesis_bound();
    if bound > tol {
        return Err(Error::Tolerance {
            what: "v_L Fourier synthesis",
            bound,
            requested: tol,
        });
    }
    table.synthesize(x)
}

/// Circle projection of the periodized kernel, computed from the real-space
/// image route. Independent of the Fourier coefficients in [`PairKernelTable`].
pub fn project_periodized(x: f64, geom: &CylinderGeometry) -> Result<f64> {
    let spec = QuadSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_subdivisions: 4000,
    };
    project_onto_circle(|y| periodized_coulomb_images(x, y, geom), geom, &spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> CylinderGeometry {
        CylinderGeometry::new(0.2, 1.0, 4).unwrap()
    }

    #[test]
    fn geometry_constraint() {
        assert!(CylinderGeometry::new(0.5, 1.0, 4).is_err());
        assert!(CylinderGeometry::new(0.35, 1.0, 4).is_ok());
        assert!(CylinderGeometry::new(0.36, 1.0, 4).is_err());
        assert!(CylinderGeometry::new(0.2, 1.0, 0).is_err());
        assert!(CylinderGeometry::new(-0.1, 1.0, 2).is_err());
    }

    #[test]
    fn coulomb_basic_values() {
        let g = CylinderGeometry::new(0.25, 1.0, 4).unwrap();
        let v = coulomb_on_cylinder(0.0, PI * 0.25, &g).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        assert!((coulomb_on_cylinder(5.0, 0.0, &g).unwrap() - 0.2).abs() < 1e-15);
        assert!(coulomb_on_cylinder(0.0, 0.0, &g).is_err());
    }

    #[test]
    fn v_per_values() {
        let spec = PeriodicPotentialSpec::single_harmonic(1.0);
        assert!((v_per_eval(0.0, &spec, 1.0) - 1.0).abs() < 1e-15);
        assert!((v_per_eval(0.5, &spec, 1.0) + 1.0).abs() < 1e-15);
        assert_eq!(v_per_eval(0.3, &PeriodicPotentialSpec::free(), 1.0), 0.0);
    }

    #[test]
    fn harmonics_fold_negative_indices() {
        let mut spec = PeriodicPotentialSpec::free();
        spec.fourier_coeffs.insert(-2, 0.25);
        spec.fourier_coeffs.insert(2, 0.25);
        spec.fourier_coeffs.insert(0, 0.0);
        let h = spec.harmonics();
        assert_eq!(h.len(), 1);
        assert_eq!(h[&2], 0.5);
    }

    #[test]
    fn v_r_domain() {
        assert!(v_r_eval(0.0, &geom()).is_err());
        assert!(v_r_eval(0.3, &geom()).unwrap() > 0.0);
    }

    #[test]
    fn coulomb_ft_domain() {
        assert!(coulomb_ft(0.0, 0.3, &geom()).is_err());
        assert!(coulomb_ft(1.0, 0.0, &geom()).is_err());
    }

    #[test]
    fn fourier_and_image_routes_agree() {
        let g = geom();
        for &(x, y) in &[(0.7, 0.3), (1.9, 0.05), (0.1, 0.6), (-1.3, 0.2)] {
            let m = fourier_cutoff(y, &g, 1e-12).unwrap();
            let a = periodized_coulomb(x, y, &g, m, 1e-12).unwrap();
            let b = periodized_coulomb_images(x, y, &g).unwrap();
            assert!((a - b).abs() < 1e-9, "x={x} y={y}: {a} vs {b}");
        }
    }

    #[test]
    fn periodized_tolerance_error() {
        let g = geom();
        let r = periodized_coulomb(0.7, 0.01, &g, 3, 1e-10);
        assert!(matches!(r, Err(Error::Tolerance { .. })));
    }

    #[test]
    fn kernel_table_symmetric_and_decaying() {
        let t = PairKernelTable::build(&geom(), 40).unwrap();
        for m in 1..40 {
            assert_eq!(t.coeff(m), t.coeff(-m));
            assert!(t.coeff(m + 1) < t.coeff(m));
            assert!(t.coeff(m) > 0.0);
        }
        assert_eq!(t.coeff(1000), 0.0);
    }

    #[test]
    fn csv_export_shape() {
        let t = PairKernelTable::build(&geom(), 3).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "m,coeff");
        assert_eq!(lines.len(), 8);
        assert!(lines[1].starts_with("-3,"));
    }
}
