use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eigen::{eigensolve_with, SolverOptions, SpectralResult};
use super::weights::{momentum_in_eigenbasis, reduced_partition, PartitionFunction};
use crate::error::{Error, Result};
use crate::many_body::{
    assemble_hamiltonian, build_sector_bases, momentum_operator, ModelParams, Sector,
};
use crate::potential::PairKernelTable;

/// Levels closer than this (relative to `max(1, |μ_0|)`) count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// How many eigenstates each momentum sector keeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSelection {
    All,
    Lowest(usize),
    /// Grow the ground sectors until the missing dipole weight, measured by the
    /// sum rule `Σ_k w_k = ⟨ψ_0, P² ψ_0⟩`, falls below `weight_tail` times the total.
    Adaptive { weight_tail: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub selection: StateSelection,
    pub solver: SolverOptions,
    pub basis_budget: Option<u128>,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            selection: StateSelection::Adaptive { weight_tail: 1e-8 },
            solver: SolverOptions::default(),
            basis_budget: None,
        }
    }
}

/// Eigen-data of one conserved momentum sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSpectrum {
    pub sector: Option<Sector>,
    pub basis_dim: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `⟨ψ_j, P ψ_k⟩` between the computed states.
    pub momentum: DMatrix<f64>,
    /// `⟨ψ_k, P² ψ_k⟩`, exact in the truncated basis.
    pub momentum_sq: Vec<f64>,
}

impl SectorSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// True when every eigenpair of the sector was computed.
    pub fn complete(&self) -> bool {
        self.eigenvalues.len() == self.basis_dim
    }

    fn from_result(sector: Option<Sector>, basis_dim: usize, res: &SpectralResult, p: &[f64]) -> Result<Self> {
        let op = crate::many_body::DiagonalOperator(p.to_vec());
        let momentum = momentum_in_eigenbasis(res, &op)?;
        let momentum_sq = (0..res.len())
            .map(|k| {
                res.eigenvectors
                    .column(k)
                    .iter()
                    .zip(p)
                    .map(|(c, pc)| (c * pc).powi(2))
                    .sum()
            })
            .collect();
        Ok(Self {
            sector,
            basis_dim,
            eigenvalues: res.eigenvalues.clone(),
            residuals: res.residuals.clone(),
            momentum,
            momentum_sq,
        })
    }
}

/// One eigenstate, addressed by sector and position within it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub sector: usize,
    pub index: usize,
}

/// Transition from the ground manifold to a computed state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    /// `μ_k - μ_0`.
    pub delta: f64,
    /// `|⟨ψ_k, P ψ_0⟩|²`, averaged over the ground manifold.
    pub weight: f64,
    pub sector: usize,
    pub index: usize,
}

/// Spectrum of the full model, split by conserved momentum sector, together
/// with the physical constants entering the conductivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpectrum {
    pub sectors: Vec<SectorSpectrum>,
    pub n_electrons: usize,
    /// `S_L = 2π r L a`.
    pub surface: f64,
    pub charge: f64,
    pub mass: f64,
}

fn solve_sector(
    params: &ModelParams,
    kernel: &PairKernelTable,
    basis: &crate::many_body::SlaterBasis,
    count: usize,
    solver: &SolverOptions,
) -> Result<SectorSpectrum> {
    let h = assemble_hamiltonian(params, basis, kernel)?;
    let p = momentum_operator(basis, &params.geometry);
    let res = eigensolve_with(&h, count, solver)?;
    SectorSpectrum::from_result(basis.sector(), basis.dim(), &res, p.entries())
}

impl ModelSpectrum {
    /// Diagonalizes every momentum sector of the model.
    pub fn compute(params: &ModelParams, kernel: &PairKernelTable, opts: &SpectrumOptions) -> Result<Self> {
        let bases = build_sector_bases(params, opts.basis_budget)?;
        let initial = |dim: usize| match opts.selection {
            StateSelection::All => dim,
            StateSelection::Lowest(k) => k.min(dim),
            StateSelection::Adaptive { .. } => {
                if dim <= opts.solver.dense_threshold {
                    dim
                } else {
                    dim.min(16)
                }
            }
        };
        let mut sectors = bases
            .par_iter()
            .map(|b| solve_sector(params, kernel, b, initial(b.dim()), &opts.solver))
            .collect::<Result<Vec<_>>>()?;
        let mut spec = Self {
            sectors: Vec::new(),
            n_electrons: params.n_electrons,
            surface: params.geometry.surface(),
            charge: params.geometry.charge,
            mass: 1.0,
        };
        if let StateSelection::Adaptive { weight_tail } = opts.selection {
            loop {
                spec.sectors = sectors.clone();
                let ground = spec.ground_manifold();
                let mut grew = false;
                for s in 0..sectors.len() {
                    let here: Vec<usize> = ground.iter().filter(|l| l.sector == s).map(|l| l.index).collect();
                    if here.is_empty() || sectors[s].complete() {
                        continue;
                    }
                    let sec = &sectors[s];
                    let total: f64 = here.iter().map(|&g| sec.momentum_sq[g]).sum();
                    let captured: f64 = here
                        .iter()
                        .map(|&g| sec.momentum.column(g).iter().map(|x| x * x).sum::<f64>())
                        .sum();
                    if total - captured > weight_tail * total {
                        let next = (2 * sec.len()).min(bases[s].dim());
                        sectors[s] = solve_sector(params, kernel, &bases[s], next, &opts.solver)?;
                        grew = true;
                    }
                }
                if !grew {
                    break;
                }
            }
        }
        spec.sectors = sectors;
        Ok(spec)
    }

    /// Single-sector spectrum of a dense symmetric `H` with a symmetric
    /// momentum matrix `P` in the same basis.
    pub fn from_dense(
        h: &DMatrix<f64>,
        p: &DMatrix<f64>,
        n_electrons: usize,
        surface: f64,
        charge: f64,
    ) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n || p.nrows() != n || p.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.nrows(),
            });
        }
        if (h - h.transpose()).abs().max() > 1e-12 || (p - p.transpose()).abs().max() > 1e-12 {
            return Err(Error::invalid("H and P must be symmetric"));
        }
        let eig = h.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let psi = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let residuals = (0..n)
            .map(|k| (h * psi.column(k) - psi.column(k) * eigenvalues[k]).norm())
            .collect();
        let p_psi = p * &psi;
        let momentum = psi.transpose() * &p_psi;
        let momentum_sq = (0..n).map(|k| p_psi.column(k).norm_squared()).collect();
        Ok(Self {
            sectors: vec![SectorSpectrum {
                sector: None,
                basis_dim: n,
                eigenvalues,
                residuals,
                momentum,
                momentum_sq,
            }],
            n_electrons,
            surface,
            charge,
            mass: 1.0,
        })
    }

    /// All computed levels, ascending.
    pub fn levels(&self) -> Vec<Level> {
        let mut out: Vec<Level> = self
            .sectors
            .iter()
            .enumerate()
            .flat_map(|(s, sec)| {
                sec.eigenvalues.iter().enumerate().map(move |(i, &energy)| Level {
                    energy,
                    sector: s,
                    index: i,
                })
            })
            .collect();
        out.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.sector.cmp(&b.sector)));
        out
    }

    pub fn num_states(&self) -> usize {
        self.sectors.iter().map(|s| s.len()).sum()
    }

    /// `μ_0`.
    pub fn ground_energy(&self) -> f64 {
        self.sectors
            .iter()
            .filter_map(|s| s.eigenvalues.first().copied())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn degeneracy_tol(&self) -> f64 {
        DEGENERACY_TOL * self.ground_energy().abs().max(1.0)
    }

    /// Levels degenerate with `μ_0`.
    pub fn ground_manifold(&self) -> Vec<Level> {
        let mu0 = self.ground_energy();
        let tol = self.degeneracy_tol();
        self.levels()
            .into_iter()
            .filter(|l| l.energy - mu0 <= tol)
            .collect()
    }

    /// Distance from `μ_0` to the first level not degenerate with it.
    pub fn gap(&self) -> Option<f64> {
        let mu0 = self.ground_energy();
        let tol = self.degeneracy_tol();
        self.levels()
            .into_iter()
            .map(|l| l.energy - mu0)
            .find(|&d| d > tol)
    }

    /// Every computed state with its ground-averaged dipole weight.
    pub fn transitions(&self) -> Vec<Transition> {
        let ground = self.ground_manifold();
        let d = ground.len() as f64;
        let mu0 = self.ground_energy();
        let mut out = Vec::new();
        for (s, sec) in self.sectors.iter().enumerate() {
            let here: Vec<usize> = ground.iter().filter(|l| l.sector == s).map(|l| l.index).collect();
            for (k, &mu) in sec.eigenvalues.iter().enumerate() {
                let weight = here.iter().map(|&g| sec.momentum[(k, g)].powi(2)).sum::<f64>() / d;
                out.push(Transition {
                    delta: mu - mu0,
                    weight,
                    sector: s,
                    index: k,
                });
            }
        }
        out.sort_by(|a, b| a.delta.total_cmp(&b.delta).then(a.sector.cmp(&b.sector)));
        out
    }

    /// Dipole weight missing from the computed states, from the sum rule.
    pub fn weight_tail(&self) -> f64 {
        let ground = self.ground_manifold();
        let d = ground.len() as f64;
        let total: f64 = ground
            .iter()
            .map(|l| self.sectors[l.sector].momentum_sq[l.index])
            .sum::<f64>()
            / d;
        let captured: f64 = self.transitions().iter().map(|t| t.weight).sum();
        (total - captured).max(0.0)
    }

    pub fn partition(&self, beta: f64, tail_tol: f64) -> Result<PartitionFunction> {
        let energies: Vec<f64> = self.levels().iter().map(|l| l.energy).collect();
        let mut z = reduced_partition(&energies, beta, tail_tol)?;
        if self.sectors.iter().all(|s| s.complete()) {
            z.truncated = false;
        }
        Ok(z)
    }

    /// Largest `|μ_j - μ_k|` within any sector.
    pub fn max_sector_gap(&self) -> f64 {
        self.sectors
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.eigenvalues[s.len() - 1] - s.eigenvalues[0])
            .fold(0.0, f64::max)
    }

    /// Shifts every level by a constant.
    pub fn shifted(&self, constant: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.sectors {
            for e in &mut s.eigenvalues {
                *e += constant;
            }
        }
        out
    }

    /// Writes `k,mu_k,w_k,residual` with levels in ascending order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,mu_k,w_k,residual")?;
        let transitions = self.transitions();
        for (k, t) in transitions.iter().enumerate() {
            let sec = &self.sectors[t.sector];
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e}",
                k,
                sec.eigenvalues[t.index],
                t.weight,
                sec.residuals[t.index]
            )?;
        }
        Ok(())
    }
}
