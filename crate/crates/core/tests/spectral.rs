use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use tubecond::many_body::{
    assemble_hamiltonian, build_basis, momentum_operator, HamiltonianMatrix, ModelParams,
};
use tubecond::potential::{CylinderGeometry, PairKernelTable, PeriodicPotentialSpec};
use tubecond::spectral::{
    dipole_weights, eigensolve, eigensolve_with, reduced_partition, truncation_clean_cutoff,
    weyl_fit, ModelSpectrum, SolverOptions, SpectrumOptions, StateSelection,
};

fn model(m: usize, n: usize, lambda: f64, v0: f64) -> ModelParams {
    ModelParams {
        geometry: CylinderGeometry::new(0.2, 1.0, 4).unwrap(),
        n_electrons: n,
        lambda,
        v_per: if v0 == 0.0 {
            PeriodicPotentialSpec::free()
        } else {
            PeriodicPotentialSpec::single_harmonic(v0)
        },
        m_modes: m,
    }
}

fn kernel(p: &ModelParams) -> PairKernelTable {
    PairKernelTable::build(&p.geometry, 2 * p.m_modes).unwrap()
}

fn all_states() -> SpectrumOptions {
    SpectrumOptions {
        selection: StateSelection::All,
        ..Default::default()
    }
}

fn full_spectrum(p: &ModelParams) -> ModelSpectrum {
    ModelSpectrum::compute(p, &kernel(p), &all_states()).unwrap()
}

fn energies(s: &ModelSpectrum) -> Vec<f64> {
    s.levels().iter().map(|l| l.energy).collect()
}

fn full_matrix(p: &ModelParams) -> HamiltonianMatrix {
    let basis = build_basis(p, None, None).unwrap();
    assemble_hamiltonian(p, &basis, &kernel(p)).unwrap()
}

#[test]
fn free_pair_ground_state() {
    let s = full_spectrum(&model(2, 2, 0.0, 0.0));
    assert!((s.ground_energy() - PI * PI / 8.0).abs() < 1e-12);
    assert_eq!(s.ground_manifold().len(), 2);
    let gap = s.gap().unwrap();
    // Next level: modes {-1, 1}, energy 2·½(π/2)².
    assert!((gap - PI * PI / 8.0).abs() < 1e-12);
}

#[test]
fn two_by_two() {
    let h = HamiltonianMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
    let r = eigensolve(&h, 2, 1e-12).unwrap();
    assert!((r.eigenvalues[0] + 1.0).abs() < 1e-15);
    assert!((r.eigenvalues[1] - 1.0).abs() < 1e-15);
}

#[test]
fn krylov_matches_dense_interacting() {
    let p = model(4, 2, 1.0, 0.5);
    let h = full_matrix(&p);
    let dense_ref: Vec<f64> = {
        let mut e: Vec<f64> = h.to_dense().symmetric_eigen().eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    };
    let opts = SolverOptions {
        dense_threshold: 0,
        tol: 1e-11,
        ..Default::default()
    };
    let r = eigensolve_with(&h, 12, &opts).unwrap();
    for (k, want) in dense_ref.iter().take(12).enumerate() {
        assert!((r.eigenvalues[k] - want).abs() < 1e-9, "k={k}");
        assert!(r.residuals[k] <= 1e-11 * r.eigenvalues[k].abs().max(1.0) * 1.0001);
    }
    assert!(r.orthonormality_error() < 1e-10);
}

#[test]
fn eigenvectors_orthonormal() {
    let h = full_matrix(&model(4, 3, 1.0, 0.5));
    let r = eigensolve(&h, h.dim(), 1e-10).unwrap();
    assert!(r.orthonormality_error() < 1e-10);
    assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn variational_in_mode_cutoff() {
    let small = energies(&full_spectrum(&model(4, 2, 1.0, 0.5)));
    let large = energies(&full_spectrum(&model(5, 2, 1.0, 0.5)));
    for (k, (a, b)) in small.iter().zip(&large).enumerate() {
        assert!(*b <= a + 1e-10, "level {k}: {b} > {a}");
    }
}

#[test]
fn translation_invariant_weights_vanish() {
    let p = model(4, 2, 1.0, 0.0);
    let s = full_spectrum(&p);
    let tol = s.degeneracy_tol();
    for t in s.transitions() {
        if t.delta > tol {
            assert!(t.weight < 1e-20, "{t:?}");
        }
    }
    // Same through the unsectored solve.
    let basis = build_basis(&p, None, None).unwrap();
    let h = assemble_hamiltonian(&p, &basis, &kernel(&p)).unwrap();
    let r = eigensolve(&h, h.dim(), 1e-10).unwrap();
    let w = dipole_weights(&r, &momentum_operator(&basis, &p.geometry)).unwrap();
    let mu0 = r.eigenvalues[0];
    for (k, &wk) in w.w.iter().enumerate() {
        if r.eigenvalues[k] - mu0 > 1e-8 {
            assert!(wk < 1e-12, "k={k} w={wk}");
        }
    }
}

#[test]
fn zero_momentum_ground_state_has_no_self_weight() {
    let p = model(4, 1, 0.0, 0.5);
    let basis = build_basis(&p, None, None).unwrap();
    let h = assemble_hamiltonian(&p, &basis, &kernel(&p)).unwrap();
    let r = eigensolve(&h, 3, 1e-12).unwrap();
    let w = dipole_weights(&r, &momentum_operator(&basis, &p.geometry)).unwrap();
    assert!(w.w[0] < 1e-24);
    assert_eq!(w.matrix.transpose(), w.matrix);
}

#[test]
fn single_particle_weights_stay_in_ground_sector() {
    let p = model(6, 1, 0.0, 0.5);
    let modulus = p.momentum_modulus().unwrap();
    let basis = build_basis(&p, None, None).unwrap();
    let h = assemble_hamiltonian(&p, &basis, &kernel(&p)).unwrap();
    let r = eigensolve(&h, h.dim(), 1e-12).unwrap();
    let w = dipole_weights(&r, &momentum_operator(&basis, &p.geometry)).unwrap();
    // Sector of each eigenvector read off from its support.
    let sector_of = |k: usize| -> i64 {
        let col = r.eigenvectors.column(k);
        let c = col.iamax();
        basis.config(c).total_momentum_index().rem_euclid(modulus)
    };
    let ground = sector_of(0);
    let mut nonzero = 0;
    for k in 0..h.dim() {
        if w.w[k] > 1e-20 {
            nonzero += 1;
            assert_eq!(sector_of(k), ground, "k={k}");
        }
    }
    assert!(nonzero > 0);
    // The sectored spectrum agrees.
    let s = full_spectrum(&p);
    let g = s.ground_manifold()[0].sector;
    for t in s.transitions() {
        if t.sector != g {
            assert_eq!(t.weight, 0.0);
        }
    }
}

#[test]
fn free_single_particle_partition() {
    let p = model(10, 1, 0.0, 0.0);
    let s = full_spectrum(&p);
    let beta = 2.0;
    let z = s.partition(beta, 1e-12).unwrap();
    let mut brute = 0.0;
    for n in -10i64..=10 {
        let e = 0.5 * (2.0 * PI * n as f64 / 4.0).powi(2);
        brute += (-beta * e).exp();
    }
    assert!((z.value - brute).abs() < 1e-12);
    assert!(!z.truncated);
    assert!(z.value >= 1.0);
}

#[test]
fn partition_limits() {
    let z = reduced_partition(&[0.0, 0.7], 3.0, 1e-3).unwrap();
    assert!((z.value - (1.0 + (-2.1f64).exp())).abs() < 1e-15);
    let cold = reduced_partition(&[1.0, 1.0, 2.0], 1e4, 1e-3).unwrap();
    assert_eq!(cold.value, 2.0);
}

#[test]
fn weyl_single_particle() {
    let p = model(63, 1, 0.0, 0.0);
    let s = full_spectrum(&p);
    let fit = weyl_fit(&energies(&s), truncation_clean_cutoff(&p)).unwrap();
    assert!((fit.exponent - 2.0).abs() < 0.05, "{fit:?}");
}

#[test]
fn weyl_free_pair_enumeration() {
    // Two-fermion energy sums enumerated directly.
    let m = 40i64;
    let mut sums = Vec::new();
    for a in -m..=m {
        for b in (a + 1)..=m {
            sums.push(0.5 * (PI * a as f64 / 2.0).powi(2) + 0.5 * (PI * b as f64 / 2.0).powi(2));
        }
    }
    let p = model(m as usize, 2, 0.0, 0.0);
    let fit = weyl_fit(&sums, truncation_clean_cutoff(&p)).unwrap();
    assert!((fit.exponent - 1.0).abs() < 0.1, "{fit:?}");
}

#[test]
fn weyl_pair_free_and_interacting() {
    for lambda in [0.0, 0.5] {
        let p = model(20, 2, lambda, 0.0);
        let s = full_spectrum(&p);
        let fit = weyl_fit(&energies(&s), truncation_clean_cutoff(&p)).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.1, "lambda={lambda}: {fit:?}");
    }
}

#[test]
fn weyl_needs_enough_levels() {
    let p = model(3, 1, 0.0, 0.0);
    let s = full_spectrum(&p);
    assert!(weyl_fit(&energies(&s), truncation_clean_cutoff(&p)).is_err());
}

#[test]
fn reference_gap_positive() {
    let s = full_spectrum(&model(6, 2, 1.0, 0.5));
    let gap = s.gap().unwrap();
    assert!(gap > 1e-10);
    assert!(!s.ground_manifold().is_empty());
}

#[test]
fn adaptive_selection_meets_weight_tail() {
    let p = model(6, 2, 1.0, 0.5);
    let opts = SpectrumOptions {
        selection: StateSelection::Adaptive { weight_tail: 1e-8 },
        solver: SolverOptions {
            dense_threshold: 10,
            ..Default::default()
        },
        basis_budget: None,
    };
    let adaptive = ModelSpectrum::compute(&p, &kernel(&p), &opts).unwrap();
    let total: f64 = adaptive.transitions().iter().map(|t| t.weight).sum::<f64>() + adaptive.weight_tail();
    assert!(adaptive.weight_tail() <= 1e-8 * total + 1e-14);
    let full = full_spectrum(&p);
    assert!((adaptive.ground_energy() - full.ground_energy()).abs() < 1e-9);
}

#[test]
fn spectrum_csv_header() {
    let s = full_spectrum(&model(2, 2, 1.0, 0.0));
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,mu_k,w_k,residual"));
    assert_eq!(lines.count(), s.num_states());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sectored_equals_unsectored(m in 2usize..5, n in 1usize..4, lambda in 0.0f64..2.0, v0 in -1.0f64..1.0) {
        let p = model(m, n, lambda, v0);
        let sectored = energies(&full_spectrum(&p));
        let mut dense: Vec<f64> = full_matrix(&p).to_dense().symmetric_eigen().eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        prop_assert_eq!(sectored.len(), dense.len());
        for (a, b) in sectored.iter().zip(&dense) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn weights_symmetric_nonnegative(m in 2usize..4, lambda in 0.0f64..2.0, v0 in -1.0f64..1.0) {
        let p = model(m, 2, lambda, v0);
        let basis = build_basis(&p, None, None).unwrap();
        let h = assemble_hamiltonian(&p, &basis, &kernel(&p)).unwrap();
        let r = eigensolve(&h, h.dim(), 1e-10).unwrap();
        let w = dipole_weights(&r, &momentum_operator(&basis, &p.geometry)).unwrap();
        prop_assert!(w.w.iter().all(|&x| x >= 0.0));
        prop_assert!((&w.matrix - w.matrix.transpose()).abs().max() < 1e-12);
    }
}
