//! Time-domain linear response: the thermal state is propagated under the
//! adiabatically switched drive up to `t = 0`, and the conductivity is read
//! off as a centred difference of the induced current in the field amplitude.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::ModelSpectrum;

/// Default bound on `e^{η t_start}`.
pub const START_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub field: f64,
    pub omega: f64,
    pub eta: f64,
    pub t_start: f64,
}

impl DriveSpec {
    /// Starts where the switching factor has decayed to [`START_TOL`].
    pub fn new(field: f64, omega: f64, eta: f64) -> Result<Self> {
        let d = Self {
            field,
            omega,
            eta,
            t_start: START_TOL.ln() / eta,
        };
        d.validate(START_TOL)?;
        Ok(d)
    }

    pub fn with_field(&self, field: f64) -> Self {
        Self { field, ..*self }
    }

    pub fn validate(&self, start_tol: f64) -> Result<()> {
        if !(self.field.abs() <= 1.0) {
            return Err(Error::invalid(format!("field amplitude {} outside [-1, 1]", self.field)));
        }
        if !(self.omega > 0.0) || !(self.eta > 0.0) {
            return Err(Error::invalid("omega and eta must be positive"));
        }
        if !(self.t_start < 0.0) {
            return Err(Error::invalid("t_start must be negative"));
        }
        if (self.eta * self.t_start).exp() > start_tol * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "e^(eta t_start) = {:e} exceeds the start tolerance {start_tol:e}",
                (self.eta * self.t_start).exp()
            )));
        }
        Ok(())
    }
}

/// `𝔞(t) = Re(e^{(iω+η)t}/(iω+η))` and `𝔞'(t) = e^{ηt} cos ωt`.
pub fn vector_potential(t: f64, omega: f64, eta: f64) -> (f64, f64) {
    let g = (eta * t).exp();
    let (s, c) = (omega * t).sin_cos();
    let a = g * (eta * c + omega * s) / (omega * omega + eta * eta);
    (a, g * c)
}

/// Physical constants of the coupling to the field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub charge: f64,
    pub mass: f64,
    pub n_electrons: usize,
    pub surface: f64,
}

impl Coupling {
    pub fn of(spec: &ModelSpectrum) -> Self {
        Self {
            charge: spec.charge,
            mass: spec.mass,
            n_electrons: spec.n_electrons,
            surface: spec.surface,
        }
    }
}

/// `H(t) = H0 - (e/m) E 𝔞(t) P + (e²/2m) N E² 𝔞(t)²`.
pub fn driven_hamiltonian(
    h0: &DMatrix<f64>,
    p: &DMatrix<f64>,
    coupling: &Coupling,
    drive: &DriveSpec,
    t: f64,
) -> Result<DMatrix<f64>> {
    if h0.shape() != p.shape() || h0.nrows() != h0.ncols() {
        return Err(Error::DimensionMismatch {
            expected: h0.nrows(),
            got: p.nrows(),
        });
    }
    let (a, _) = vector_potential(t, drive.omega, drive.eta);
    let e = coupling.charge;
    let m = coupling.mass;
    let scalar = e * e / (2.0 * m) * coupling.n_electrons as f64 * (drive.field * a).powi(2);
    let mut h = h0 - p * (e / m * drive.field * a);
    for i in 0..h.nrows() {
        h[(i, i)] += scalar;
    }
    Ok(h)
}

/// Block-diagonal density matrix, one block per momentum sector, each in
/// the eigenbasis of the undriven Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub blocks: Vec<DMatrix<Complex64>>,
    pub beta: f64,
    pub t: f64,
}

impl DensityMatrix {
    /// `e^{-βH0} / Tr e^{-βH0}`.
    pub fn thermal(spec: &ModelSpectrum, beta: f64) -> Result<Self> {
        let weights = boltzmann_weights(spec, beta)?;
        let blocks = weights
            .iter()
            .map(|w| DMatrix::from_diagonal(&DVector::from_iterator(w.len(), w.iter().map(|&x| Complex64::new(x, 0.0)))))
            .collect();
        Ok(Self { blocks, beta, t: f64::NEG_INFINITY })
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace().re).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| (b - b.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .blocks
            .iter()
            .flat_map(|b| {
                let h = (b + b.adjoint()) * Complex64::new(0.5, 0.0);
                h.symmetric_eigenvalues().iter().copied().collect::<Vec<_>>()
            })
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    /// `Tr(ρ P)` with `P` given per sector in the same basis.
    pub fn expectation(&self, p: &[DMatrix<f64>]) -> f64 {
        self.blocks
            .iter()
            .zip(p)
            .map(|(r, p)| {
                let mut s = 0.0;
                for i in 0..r.nrows() {
                    for j in 0..r.ncols() {
                        s += (r[(i, j)] * p[(j, i)]).re;
                    }
                }
                s
            })
            .sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

fn boltzmann_weights(spec: &ModelSpectrum, beta: f64) -> Result<Vec<Vec<f64>>> {
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    if let Some(s) = spec.sectors.iter().find(|s| !s.complete()) {
        return Err(Error::Consistency(format!(
            "time propagation needs complete sectors; one has {} of {} states",
            s.len(),
            s.basis_dim
        )));
    }
    let mu0 = spec.ground_energy();
    let raw: Vec<Vec<f64>> = spec
        .sectors
        .iter()
        .map(|s| s.eigenvalues.iter().map(|&mu| (-beta * (mu - mu0)).exp()).collect())
        .collect();
    let z: f64 = raw.iter().flatten().sum();
    Ok(raw.into_iter().map(|v| v.into_iter().map(|x| x / z).collect()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exact free evolution in half steps around the field kick at the
    /// midpoint, applied to the thermally occupied eigenstates.
    ExponentialMidpoint,
    /// Classical Runge-Kutta on the density matrix.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    pub scheme: Scheme,
    /// Time step as a fraction of the fastest period, `dt = dt_factor / max(gap, ω)`.
    pub dt_factor: f64,
    /// Overrides `dt_factor` when set.
    pub dt: Option<f64>,
    /// States with smaller thermal occupation are not propagated.
    pub occupation_cutoff: f64,
    /// Record the trajectory every this many steps.
    pub record_every: Option<usize>,
    /// Combine runs at `dt` and `dt/2` to cancel the second-order step error
    /// of the conductivity.
    #[serde(default)]
    pub richardson: bool,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::ExponentialMidpoint,
            dt_factor: 0.1,
            dt: None,
            occupation_cutoff: 1e-18,
            record_every: None,
            richardson: false,
        }
    }
}

/// Rows `(t, Tr(ρP), J)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub rows: Vec<(f64, f64, f64)>,
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,tr_rho_p,j")?;
        for (t, p, j) in &self.rows {
            writeln!(w, "{t:.16e},{p:.16e},{j:.16e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub rho: DensityMatrix,
    pub dt: f64,
    pub steps: usize,
    pub trajectory: Trajectory,
}

/// `J = -(e/(m S)) [Tr(ρP) - N e E 𝔞(t) Tr ρ]`.
pub fn current_density(rho: &DensityMatrix, p: &[DMatrix<f64>], coupling: &Coupling, drive: &DriveSpec, t: f64) -> f64 {
    let (a, _) = vector_potential(t, drive.omega, drive.eta);
    current_from(rho.expectation(p), rho.trace(), coupling, drive.field, a)
}

fn current_from(tr_rho_p: f64, tr_rho: f64, c: &Coupling, field: f64, a: f64) -> f64 {
    -(c.charge / (c.mass * c.surface)) * (tr_rho_p - c.n_electrons as f64 * c.charge * field * a * tr_rho)
}

fn step_size(spec: &ModelSpectrum, drive: &DriveSpec, opts: &PropagationOptions) -> Result<(f64, usize)> {
    let dt0 = match opts.dt {
        Some(dt) => dt,
        None => opts.dt_factor / spec.max_sector_gap().max(drive.omega),
    };
    if !(dt0 > 0.0) || !dt0.is_finite() {
        return Err(Error::invalid(format!("time step must be positive, got {dt0}")));
    }
    let steps = (-drive.t_start / dt0).ceil() as usize;
    Ok((-drive.t_start / steps as f64, steps))
}

/// Propagates the thermal state from `drive.t_start` to `t = 0`.
pub fn propagate_density(
    spec: &ModelSpectrum,
    beta: f64,
    drive: &DriveSpec,
    opts: &PropagationOptions,
) -> Result<Propagation> {
    drive.validate(1.0)?;
    let coupling = Coupling::of(spec);
    let (dt, steps) = step_size(spec, drive, opts)?;
    let out = match opts.scheme {
        Scheme::ExponentialMidpoint => propagate_split(spec, beta, drive, &coupling, dt, steps, opts)?,
        Scheme::Rk4 => propagate_rk4(spec, beta, drive, &coupling, dt, steps, opts)?,
    };
    let drift = (out.rho.trace() - 1.0).abs();
    if drift > 1e-8 {
        return Err(Error::Instability(format!("trace drift {drift:e} with dt = {dt:e}")));
    }
    Ok(out)
}

fn momentum_blocks(spec: &ModelSpectrum) -> Vec<DMatrix<f64>> {
    spec.sectors.iter().map(|s| s.momentum.clone()).collect()
}

fn propagate_split(
    spec: &ModelSpectrum,
    beta: f64,
    drive: &DriveSpec,
    coupling: &Coupling,
    dt: f64,
    steps: usize,
    opts: &PropagationOptions,
) -> Result<Propagation> {
    let weights = boltzmann_weights(spec, beta)?;
    let kick = coupling.charge / coupling.mass * drive.field;
    let record = opts.record_every.filter(|&r| r > 0);

    struct Block {
        /// Eigenvectors of `P`, columns in the `H0` eigenbasis.
        v: DMatrix<Complex64>,
        p_eig: Vec<f64>,
        mu: Vec<f64>,
        /// Free evolution time not yet applied to `u`.
        pending: f64,
        /// Occupied states in the `H0` eigenbasis, one per column.
        u: DMatrix<Complex64>,
        occ: Vec<f64>,
    }
    impl Block {
        fn flush(&mut self) {
            if self.pending == 0.0 {
                return;
            }
            for (r, &mu) in self.mu.iter().enumerate() {
                let z = Complex64::from_polar(1.0, -mu * self.pending);
                self.u.row_mut(r).iter_mut().for_each(|x| *x *= z);
            }
            self.pending = 0.0;
        }
        fn kick(&mut self, angle: f64) {
            if angle == 0.0 {
                return;
            }
            self.flush();
            // Apply `1 + V (e^{iθp} - 1) V†` so that roundoff scales with the angle.
            let mut w = self.v.adjoint() * &self.u;
            for (r, &p) in self.p_eig.iter().enumerate() {
                let half = 0.5 * angle * p;
                let z = Complex64::from_polar(2.0 * half.sin(), half) * Complex64::i();
                w.row_mut(r).iter_mut().for_each(|x| *x *= z);
            }
            self.u += &self.v * w;
        }
    }
    let mut blocks = Vec::new();
    for (sec, w) in spec.sectors.iter().zip(&weights) {
        let n = sec.len();
        let eig = sec.momentum.clone().symmetric_eigen();
        let kept: Vec<usize> = (0..n).filter(|&k| w[k] > opts.occupation_cutoff).collect();
        let mut u = DMatrix::zeros(n, kept.len());
        for (c, &k) in kept.iter().enumerate() {
            u[(k, c)] = Complex64::new(1.0, 0.0);
        }
        blocks.push(Block {
            v: eig.eigenvectors.map(|x| Complex64::new(x, 0.0)),
            p_eig: eig.eigenvalues.iter().copied().collect(),
            mu: sec.eigenvalues.to_vec(),
            pending: 0.0,
            occ: kept.iter().map(|&k| w[k]).collect(),
            u,
        });
    }

    let p = momentum_blocks(spec);
    let moments = |blocks: &[Block]| -> (f64, f64) {
        let mut tr_p = 0.0;
        let mut tr = 0.0;
        for (b, p) in blocks.iter().zip(&p) {
            let pc = p.map(|x| Complex64::new(x, 0.0));
            let pu = &pc * &b.u;
            for c in 0..b.u.ncols() {
                tr_p += b.occ[c] * b.u.column(c).dotc(&pu.column(c)).re;
                tr += b.occ[c] * b.u.column(c).norm_squared();
            }
        }
        (tr_p, tr)
    };
    let mut trajectory = Trajectory::default();
    let push_row = |blocks: &[Block], t: f64, trajectory: &mut Trajectory| {
        let (a, _) = vector_potential(t, drive.omega, drive.eta);
        let (tr_p, tr) = moments(blocks);
        trajectory.rows.push((t, tr_p, current_from(tr_p, tr, coupling, drive.field, a)));
    };

    for step in 0..steps {
        let t_mid = drive.t_start + (step as f64 + 0.5) * dt;
        let (a, _) = vector_potential(t_mid, drive.omega, drive.eta);
        for b in blocks.iter_mut() {
            b.pending += 0.5 * dt;
            b.kick(kick * a * dt);
            b.pending += 0.5 * dt;
        }
        if let Some(r) = record {
            if (step + 1) % r == 0 || step + 1 == steps {
                let t = if step + 1 == steps { 0.0 } else { drive.t_start + (step + 1) as f64 * dt };
                for b in blocks.iter_mut() {
                    b.flush();
                }
                push_row(&blocks, t, &mut trajectory);
            }
        }
    }
    for b in blocks.iter_mut() {
        b.flush();
    }

    let out = blocks
        .iter()
        .map(|b| {
            let mut scaled = b.u.clone();
            for (c, &o) in b.occ.iter().enumerate() {
                scaled.column_mut(c).iter_mut().for_each(|x| *x *= o);
            }
            scaled * b.u.adjoint()
        })
        .collect();
    Ok(Propagation {
        rho: DensityMatrix { blocks: out, beta, t: 0.0 },
        dt,
        steps,
        trajectory,
    })
}

fn propagate_rk4(
    spec: &ModelSpectrum,
    beta: f64,
    drive: &DriveSpec,
    coupling: &Coupling,
    dt: f64,
    steps: usize,
    opts: &PropagationOptions,
) -> Result<Propagation> {
    let mut rho = DensityMatrix::thermal(spec, beta)?;
    let p = momentum_blocks(spec);
    let h0: Vec<DMatrix<f64>> = spec
        .sectors
        .iter()
        .map(|s| DMatrix::from_diagonal(&DVector::from_vec(s.eigenvalues.clone())))
        .collect();
    let i = Complex64::new(0.0, 1.0);
    let deriv = |t: f64, r: &[DMatrix<Complex64>]| -> Result<Vec<DMatrix<Complex64>>> {
        r.iter()
            .zip(h0.iter().zip(&p))
            .map(|(r, (h, p))| {
                let h = driven_hamiltonian(h, p, coupling, drive, t)?.map(|x| Complex64::new(x, 0.0));
                Ok((&h * r - r * &h) * (-i))
            })
            .collect()
    };
    let axpy = |r: &[DMatrix<Complex64>], k: &[DMatrix<Complex64>], s: f64| -> Vec<DMatrix<Complex64>> {
        r.iter().zip(k).map(|(a, b)| a + b * Complex64::new(s, 0.0)).collect()
    };
    let mut trajectory = Trajectory::default();
    let record = opts.record_every.filter(|&r| r > 0);
    for step in 0..steps {
        let t = drive.t_start + step as f64 * dt;
        let r = &rho.blocks;
        let k1 = deriv(t, r)?;
        let k2 = deriv(t + 0.5 * dt, &axpy(r, &k1, 0.5 * dt))?;
        let k3 = deriv(t + 0.5 * dt, &axpy(r, &k2, 0.5 * dt))?;
        let k4 = deriv(t + dt, &axpy(r, &k3, dt))?;
        rho.blocks = r
            .iter()
            .enumerate()
            .map(|(s, b)| b + (&k1[s] + (&k2[s] + &k3[s]) * Complex64::new(2.0, 0.0) + &k4[s]) * Complex64::new(dt / 6.0, 0.0))
            .collect();
        let t_next = t + dt;
        if let Some(rec) = record {
            if (step + 1) % rec == 0 || step + 1 == steps {
                let t_row = if step + 1 == steps { 0.0 } else { t_next };
                trajectory.rows.push((t_row, rho.expectation(&p), current_density(&rho, &p, coupling, drive, t_row)));
            }
        }
    }
    rho.t = 0.0;
    Ok(Propagation { rho, dt, steps, trajectory })
}

/// `σ̂ = [J(0; +E) - J(0; -E)] / (2E)`, the two trajectories run concurrently.
pub fn finite_difference_conductivity(
    spec: &ModelSpectrum,
    beta: f64,
    omega: f64,
    eta: f64,
    e_step: f64,
    opts: &PropagationOptions,
) -> Result<f64> {
    if !(e_step > 0.0) || e_step > 1.0 {
        return Err(Error::invalid(format!("E step must lie in (0, 1], got {e_step}")));
    }
    if opts.richardson {
        let base = PropagationOptions { richardson: false, ..*opts };
        let (dt, _) = step_size(spec, &DriveSpec::new(e_step, omega, eta)?, &base)?;
        let coarse = PropagationOptions { dt: Some(dt), ..base };
        let fine = PropagationOptions { dt: Some(0.5 * dt), ..base };
        let (a, b) = rayon::join(
            || finite_difference_conductivity(spec, beta, omega, eta, e_step, &coarse),
            || finite_difference_conductivity(spec, beta, omega, eta, e_step, &fine),
        );
        let order = match opts.scheme {
            Scheme::ExponentialMidpoint => 2,
            Scheme::Rk4 => 4,
        };
        let f = (1u32 << order) as f64;
        return Ok((f * b? - a?) / (f - 1.0));
    }
    let drive = DriveSpec::new(e_step, omega, eta)?;
    let coupling = Coupling::of(spec);
    let p = momentum_blocks(spec);
    let current = |field: f64| -> Result<f64> {
        let d = drive.with_field(field);
        let prop = propagate_density(spec, beta, &d, opts)?;
        Ok(current_density(&prop.rho, &p, &coupling, &d, 0.0))
    };
    let (plus, minus) = rayon::join(|| current(e_step), || current(-e_step));
    Ok((plus? - minus?) / (2.0 * e_step))
}
