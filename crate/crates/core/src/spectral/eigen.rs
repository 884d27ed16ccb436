use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::many_body::HamiltonianMatrix;

/// Eigensolver controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Matrices up to this dimension are diagonalized densely.
    pub dense_threshold: usize,
    /// Residual tolerance `‖Hψ - μψ‖ <= tol · max(1, |μ|)`.
    pub tol: f64,
    /// Krylov subspace size per Lanczos cycle.
    pub krylov_dim: usize,
    pub max_restarts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dense_threshold: 2000,
            tol: 1e-10,
            krylov_dim: 80,
            max_restarts: 400,
        }
    }
}

/// Lowest eigenpairs of a real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    /// Ascending eigenvalues `μ_k`.
    pub eigenvalues: Vec<f64>,
    /// Column `k` holds `ψ_k`.
    pub eigenvectors: DMatrix<f64>,
    pub n_converged: usize,
    /// `‖Hψ_k - μ_k ψ_k‖`.
    pub residuals: Vec<f64>,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `max |ΨᵀΨ - 1|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.eigenvectors.transpose() * &self.eigenvectors;
        let n = g.nrows();
        (g - DMatrix::identity(n, n)).abs().max()
    }
}

/// Lowest `k_lowest` eigenpairs with default [`SolverOptions`] and tolerance `tol`.
pub fn eigensolve(h: &HamiltonianMatrix, k_lowest: usize, tol: f64) -> Result<SpectralResult> {
    eigensolve_with(
        h,
        k_lowest,
        &SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )
}

/// Lowest `k_lowest` eigenpairs; dense below `dense_threshold`, restarted
/// Lanczos with locking above. Fails with [`Error::NonConvergence`] when fewer
/// than `k_lowest` pairs meet the tolerance; [`lanczos`] exposes the partial result.
pub fn eigensolve_with(
    h: &HamiltonianMatrix,
    k_lowest: usize,
    opts: &SolverOptions,
) -> Result<SpectralResult> {
    let n = h.dim();
    if k_lowest > n {
        return Err(Error::invalid(format!(
            "requested {k_lowest} eigenpairs of a {n}-dimensional matrix"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("eigensolver tolerance must be positive"));
    }
    let res = if n <= opts.dense_threshold {
        dense(h, k_lowest)
    } else {
        lanczos(h, k_lowest, opts)
    };
    if res.n_converged < k_lowest {
        return Err(Error::NonConvergence {
            what: "Lanczos eigensolver",
            detail: format!("{} of {} eigenpairs converged", res.n_converged, k_lowest),
        });
    }
    Ok(res)
}

fn residual(h: &HamiltonianMatrix, v: &[f64], mu: f64) -> f64 {
    let mut hv = vec![0.0; v.len()];
    h.matvec(v, &mut hv);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - mu * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn dense(h: &HamiltonianMatrix, k: usize) -> SpectralResult {
    let eig = h.to_dense().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(k);
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(h.dim(), k, |r, c| eig.eigenvectors[(r, order[c])]);
    let residuals = (0..k)
        .map(|c| residual(h, eigenvectors.column(c).as_slice(), eigenvalues[c]))
        .collect();
    SpectralResult {
        eigenvalues,
        eigenvectors,
        n_converged: k,
        residuals,
    }
}

/// Deterministic, unstructured start vector (golden-ratio sequence).
fn seed_vector(n: usize, seed: usize) -> DVector<f64> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    let shift = (seed as f64 * std::f64::consts::SQRT_2).fract();
    DVector::from_fn(n, |i, _| {
        let t = (i as f64 * PHI + shift + (i as f64).sqrt() * 0.1).fract();
        t - 0.5
    })
}

fn orthogonalize(w: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(w);
            w.axpy(-c, b, 1.0);
        }
    }
}

fn apply(h: &HamiltonianMatrix, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    h.matvec(v.as_slice(), out.as_mut_slice());
    out
}

/// Thick-restart Lanczos with full reorthogonalization and locking.
///
/// Each cycle extends the active space by Krylov steps, performs Rayleigh-Ritz,
/// locks converged Ritz pairs from the bottom up and keeps the lowest
/// unconverged Ritz vectors as the next starting space. New directions are
/// always orthogonalized against locked vectors, so repeated eigenvalues are
/// found one copy at a time. The run stops once `k` pairs are locked and the
/// lowest converged Ritz value of the deflated operator lies above the `k`-th.
pub fn lanczos(h: &HamiltonianMatrix, k: usize, opts: &SolverOptions) -> SpectralResult {
    let n = h.dim();
    if k == 0 || n == 0 {
        return SpectralResult {
            eigenvalues: Vec::new(),
            eigenvectors: DMatrix::zeros(n, 0),
            n_converged: 0,
            residuals: Vec::new(),
        };
    }
    let threshold_for = |theta: f64| opts.tol * theta.abs().max(1.0);
    let mut locked: Vec<(f64, DVector<f64>)> = Vec::new();
    let mut active: Vec<DVector<f64>> = Vec::new();
    let mut images: Vec<DVector<f64>> = Vec::new();
    let mut seed = 0;
    let mut done = false;
    let mut verifying = false;
    let mut restart_dir: Option<DVector<f64>> = None;

    for _ in 0..opts.max_restarts {
        let locked_vecs: Vec<DVector<f64>> = locked.iter().map(|(_, v)| v.clone()).collect();
        let free_dim = n - locked.len();
        if free_dim == 0 {
            done = true;
            break;
        }
        let wanted = k.saturating_sub(locked.len()).max(1);
        let m = free_dim.min(opts.krylov_dim.max(2 * wanted + 20));

        // Extend the active space by Krylov steps.
        while active.len() < m {
            let mut w = match (restart_dir.take(), images.last()) {
                (Some(r), _) => r,
                (None, Some(hv)) => hv.clone(),
                (None, None) => seed_vector(n, seed),
            };
            orthogonalize(&mut w, &active);
            orthogonalize(&mut w, &locked_vecs);
            orthogonalize(&mut w, &active);
            let nrm = w.norm();
            let scale = images.iter().map(|v| v.amax()).fold(1.0f64, f64::max);
            if nrm < 1e-10 * scale {
                // Invariant subspace: continue from a fresh direction.
                seed += 1;
                let mut fresh = seed_vector(n, seed);
                orthogonalize(&mut fresh, &locked_vecs);
                orthogonalize(&mut fresh, &active);
                orthogonalize(&mut fresh, &locked_vecs);
                let fn_ = fresh.norm();
                if fn_ < 1e-8 {
                    break;
                }
                w = fresh / fn_;
            } else {
                w /= nrm;
            }
            images.push(apply(h, &w));
            active.push(w);
        }
        if active.is_empty() {
            done = true;
            break;
        }

        // Rayleigh-Ritz on the active space.
        let size = active.len();
        let t = DMatrix::from_fn(size, size, |i, j| {
            0.5 * (active[i].dot(&images[j]) + active[j].dot(&images[i]))
        });
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let combine = |vs: &[DVector<f64>], i: usize| {
            let s = eig.eigenvectors.column(i);
            let mut y = DVector::zeros(n);
            for (c, v) in vs.iter().enumerate() {
                y.axpy(s[c], v, 1.0);
            }
            y
        };

        let cap = if locked.len() >= k {
            let mut vals: Vec<f64> = locked.iter().map(|(v, _)| *v).collect();
            vals.sort_by(f64::total_cmp);
            Some(vals[k - 1])
        } else {
            None
        };
        let locked_before = locked.len();
        let mut next_active = Vec::new();
        let keep = (wanted + 10).min(m / 2).max(1);
        let mut locking = true;
        for (rank, &i) in order.iter().enumerate() {
            let theta = eig.eigenvalues[i];
            let y = combine(&active, i);
            let hy = combine(&images, i);
            let res = (&hy - &y * theta).norm();
            let converged = res <= threshold_for(theta);
            if locking && converged {
                if let Some(c) = cap {
                    if theta >= c + threshold_for(c) && rank == 0 {
                        done = true;
                        break;
                    }
                    if theta >= c + threshold_for(c) {
                        locking = false;
                        continue;
                    }
                }
                locked.push((theta, y));
                continue;
            }
            locking = false;
            if next_active.len() < keep {
                next_active.push(y);
            } else {
                break;
            }
        }
        if done {
            if verifying {
                break;
            }
            // A single Krylov sequence misses extra copies of degenerate
            // levels; confirm from a fresh start vector.
            done = false;
            verifying = true;
            active.clear();
            images.clear();
            seed += 1;
            continue;
        }
        if locked.len() > locked_before {
            verifying = false;
        }
        active = next_active;
        // Re-orthonormalize the kept vectors against the newly locked ones.
        let locked_vecs: Vec<DVector<f64>> = locked.iter().map(|(_, v)| v.clone()).collect();
        let mut cleaned: Vec<DVector<f64>> = Vec::new();
        let mut cleaned_images = Vec::new();
        for v in active.iter() {
            let mut w = v.clone();
            orthogonalize(&mut w, &locked_vecs);
            orthogonalize(&mut w, &cleaned);
            let nrm = w.norm();
            if nrm > 1e-8 {
                w /= nrm;
                cleaned_images.push(apply(h, &w));
                cleaned.push(w);
            }
        }
        active = cleaned;
        images = cleaned_images;
        // Continue the Krylov sequence along the residual of the lowest kept
        // Ritz vector.
        if let (Some(y), Some(hy)) = (active.first(), images.first()) {
            restart_dir = Some(hy - y * y.dot(hy));
        }
        if active.is_empty() {
            seed += 1;
        }
    }

    locked.sort_by(|a, b| a.0.total_cmp(&b.0));
    locked.truncate(k);
    let found = locked.len();
    let eigenvalues: Vec<f64> = locked.iter().map(|(v, _)| *v).collect();
    let mut eigenvectors = DMatrix::zeros(n, found);
    for (c, (_, v)) in locked.iter().enumerate() {
        eigenvectors.set_column(c, v);
    }
    let residuals: Vec<f64> = (0..found)
        .map(|c| residual(h, eigenvectors.column(c).as_slice(), eigenvalues[c]))
        .collect();
    let n_converged = if done { found } else { found.min(k.saturating_sub(1)) };
    SpectralResult {
        eigenvalues,
        eigenvectors,
        n_converged,
        residuals,
    }
}
