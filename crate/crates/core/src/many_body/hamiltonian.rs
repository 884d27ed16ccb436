use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::basis::SlaterBasis;
use super::ModelParams;
use crate::error::{Error, Result};
use crate::potential::{CylinderGeometry, PairKernelTable};

/// Real symmetric sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl HamiltonianMatrix {
    /// Builds from per-row `(column, value)` lists; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if c >= dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: c + 1,
                    });
                }
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        let mut out = Self {
            dim,
            row_ptr,
            cols,
            vals,
        };
        out.drop_zeros();
        Ok(out)
    }

    fn drop_zeros(&mut self) {
        let mut row_ptr = vec![0];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.vals[k] != 0.0 {
                    cols.push(self.cols[k]);
                    vals.push(self.vals[k]);
                }
            }
            row_ptr.push(cols.len());
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
    }

    /// Sparse copy of a dense symmetric matrix.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| (j, m[(i, j)])).collect())
            .collect();
        let out = Self::from_rows(rows)?;
        if out.max_asymmetry() > 1e-12 {
            return Err(Error::invalid("matrix is not symmetric"));
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// All stored `(row, col, value)` entries.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// `y = H x`, parallel over rows.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        });
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }

    /// `max |H_ij - H_ji|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        self.entries()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Coordinate listing with header `row,col,value`.
    pub fn write_coo_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "row,col,value")?;
        for (i, j, v) in self.entries() {
            writeln!(w, "{i},{j},{v:.16e}")?;
        }
        Ok(())
    }
}

/// Operator that is diagonal in the Slater basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator(pub Vec<f64>);

impl DiagonalOperator {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Total momentum `P = Σ_j -i d/dx_j`: diagonal with entries `Σ_{n occ} 2πn/(La)`.
pub fn momentum_operator(basis: &SlaterBasis, geom: &CylinderGeometry) -> DiagonalOperator {
    DiagonalOperator(
        basis
            .configs()
            .map(|c| c.occupied.iter().map(|&n| geom.mode_momentum(n)).sum())
            .collect(),
    )
}

/// `(-1)^(number of occupied modes below bit)`.
#[inline]
fn sign_below(mask: u128, bit: u32) -> f64 {
    if (mask & ((1u128 << bit) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn check_compatible(params: &ModelParams, basis: &SlaterBasis, kernel: &PairKernelTable) -> Result<()> {
    params.validate()?;
    if basis.m_modes() != params.m_modes || basis.n_particles() != params.n_electrons {
        return Err(Error::Consistency(format!(
            "basis built for M = {}, N = {} but model has M = {}, N = {}",
            basis.m_modes(),
            basis.n_particles(),
            params.m_modes,
            params.n_electrons
        )));
    }
    if kernel.geometry != params.geometry {
        return Err(Error::Consistency(
            "pair kernel was tabulated for a different geometry".into(),
        ));
    }
    if params.lambda != 0.0 && params.n_electrons > 1 && kernel.m_max() < 2 * params.m_modes {
        return Err(Error::Consistency(format!(
            "pair kernel holds |m| <= {} but momentum transfers reach {}",
            kernel.m_max(),
            2 * params.m_modes
        )));
    }
    if let Some(sector) = basis.sector() {
        let closed = match (params.momentum_modulus(), sector.modulus) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(h), Some(q)) => h % q == 0,
        };
        if !closed {
            return Err(Error::Consistency(format!(
                "sector {sector:?} is not conserved by the lattice potential harmonics"
            )));
        }
    }
    Ok(())
}

/// Matrix of the effective Hamiltonian in `basis`:
/// kinetic `Σ ½k_n²`, lattice potential `Σ_i v_per(x_i)`, and pair interaction
/// `(λ/2) Σ_{q,k1,k2} ṽ_q c†_{k1+q} c†_{k2-q} c_{k2} c_{k1}`.
pub fn assemble_hamiltonian(
    params: &ModelParams,
    basis: &SlaterBasis,
    kernel: &PairKernelTable,
) -> Result<HamiltonianMatrix> {
    check_compatible(params, basis, kernel)?;
    let m = params.m_modes as i64;
    let top = 2 * m;
    let geom = &params.geometry;
    let cells = geom.cells as i64;
    let harmonics = params.v_per.harmonics();
    let c0 = harmonics.get(&0).copied().unwrap_or(0.0);
    let hops: Vec<(i64, f64)> = harmonics
        .iter()
        .filter(|(&j, _)| j != 0)
        .flat_map(|(&j, &c)| {
            let s = j as i64 * cells;
            [(s, 0.5 * c), (-s, 0.5 * c)]
        })
        .collect();
    let half_lambda = 0.5 * params.lambda;
    let interacting = half_lambda != 0.0 && params.n_electrons > 1;

    let rows = (0..basis.dim())
        .into_par_iter()
        .map(|row| -> Result<Vec<(usize, f64)>> {
            let mask = basis.mask(row);
            let bits: Vec<u32> = (0..=top as u32).filter(|&b| mask >> b & 1 == 1).collect();
            let mut out = Vec::new();
            let mut push = |new_mask: u128, value: f64| -> Result<()> {
                let col = basis.position(new_mask).ok_or_else(|| {
                    Error::Consistency("Hamiltonian leaves the declared sector".into())
                })?;
                out.push((col, value));
                Ok(())
            };

            let kinetic: f64 = bits
                .iter()
                .map(|&b| 0.5 * geom.mode_momentum(b as i64 - m).powi(2))
                .sum();
            push(mask, kinetic + c0 * bits.len() as f64)?;

            for &b in &bits {
                for &(shift, amp) in &hops {
                    let nb = b as i64 + shift;
                    if !(0..=top).contains(&nb) {
                        continue;
                    }
                    let nb = nb as u32;
                    let m1 = mask ^ (1u128 << b);
                    if m1 >> nb & 1 == 1 {
                        continue;
                    }
                    let sign = sign_below(mask, b) * sign_below(m1, nb);
                    push(m1 | (1u128 << nb), amp * sign)?;
                }
            }

            if interacting {
                for &b1 in &bits {
                    for &b2 in &bits {
                        if b1 == b2 {
                            continue;
                        }
                        let s1 = sign_below(mask, b1);
                        let m1 = mask ^ (1u128 << b1);
                        let s2 = sign_below(m1, b2);
                        let m2 = m1 ^ (1u128 << b2);
                        let (lo, hi) = ((b2 as i64 - top).max(-(b1 as i64)), (top - b1 as i64).min(b2 as i64));
                        for q in lo..=hi {
                            let p1 = (b1 as i64 + q) as u32;
                            let p2 = (b2 as i64 - q) as u32;
                            if p1 == p2 || m2 >> p2 & 1 == 1 || m2 >> p1 & 1 == 1 {
                                continue;
                            }
                            let s3 = sign_below(m2, p2);
                            let m3 = m2 | (1u128 << p2);
                            let s4 = sign_below(m3, p1);
                            let m4 = m3 | (1u128 << p1);
                            let v = kernel.coeff(q);
                            if v != 0.0 {
                                push(m4, half_lambda * v * s1 * s2 * s3 * s4)?;
                            }
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    HamiltonianMatrix::from_rows(rows)
}
