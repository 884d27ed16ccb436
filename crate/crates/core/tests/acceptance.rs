//! Acceptance criteria AC-1 to AC-10. Prints one line per criterion and exits
//! non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tubecond::conductivity::{
    absorptive_sum, find_peak, line_spectrum, sigma_finite_beta, sigma_leading, LineSpectrum, OmegaGrid,
    Prefactors,
};
use tubecond::kubo::{finite_difference_conductivity, PropagationOptions};
use tubecond::many_body::ModelParams;
use tubecond::potential::{project_periodized, v_r_eval, CylinderGeometry, PairKernelTable, PeriodicPotentialSpec};
use tubecond::spectral::{truncation_clean_cutoff, weyl_fit, ModelSpectrum, SpectrumOptions, StateSelection};

use common::{rel_err, v_r_by_projection};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn geom(r: f64, cells: usize) -> CylinderGeometry {
    CylinderGeometry::new(r, 1.0, cells).unwrap()
}

fn model(m: usize, n: usize, lambda: f64, v0: f64) -> ModelParams {
    ModelParams {
        geometry: geom(0.2, 4),
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

fn spectrum(p: &ModelParams) -> ModelSpectrum {
    let k = PairKernelTable::build(&p.geometry, 2 * p.m_modes).unwrap();
    let opts = SpectrumOptions {
        selection: StateSelection::All,
        ..Default::default()
    };
    ModelSpectrum::compute(p, &k, &opts).unwrap()
}

fn reference() -> ModelSpectrum {
    spectrum(&model(6, 2, 1.0, 0.5))
}

fn energies(s: &ModelSpectrum) -> Vec<f64> {
    let mut e: Vec<f64> = s.sectors.iter().flat_map(|x| x.eigenvalues.iter().copied()).collect();
    e.sort_by(f64::total_cmp);
    e
}

fn ac1() -> Check {
    let r = 0.2;
    let g = geom(r, 4);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let x = r * 0.01 * 10f64.powf(4.0 * i as f64 / 19.0);
        worst = worst.max(rel_err(v_r_eval(x, &g).unwrap(), v_r_by_projection(x, r)));
    }
    ensure(worst <= 1e-8, format!("max relative deviation {worst:.2e} (bound 1e-8)"))
}

fn ac2() -> Check {
    let r = 0.05;
    let g = geom(r, 4);
    let x: f64 = 1e-6;
    let small = (3.0 * 2f64.ln() + r.ln() - x.ln()) / (PI * r);
    let rs = rel_err(v_r_eval(x, &g).unwrap(), small);
    let x = 100.0 * r;
    let rl = rel_err(v_r_eval(x, &g).unwrap(), 1.0 / x - r * r / x.powi(3));
    ensure(
        rs <= 1e-3 && rl <= 1e-6,
        format!("small-x residual {rs:.2e} (bound 1e-3), large-x residual {rl:.2e} (bound 1e-6)"),
    )
}

fn ac3() -> Check {
    let mut scaled = Vec::new();
    for &cells in &[8usize, 16, 32, 64] {
        let g = geom(0.2, cells);
        let table = PairKernelTable::build(&g, 60 * cells).unwrap();
        let quarter = 0.25 * g.torus_length();
        // Both kernels are even; x = 0 is the shared log singularity.
        let sup = (1..=200)
            .map(|i| {
                let x = quarter * i as f64 / 200.0;
                (table.synthesize(x).unwrap() - v_r_eval(x, &g).unwrap()).abs()
            })
            .fold(0.0, f64::max);
        scaled.push(sup * cells as f64);
    }
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(0.0, f64::max);

    let g = geom(0.2, 4);
    let table = PairKernelTable::build(&g, 400).unwrap();
    let la = g.torus_length();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 50 {
        let x: f64 = rng.random_range(-0.5 * la..0.5 * la);
        if x.abs() < 1e-3 {
            continue;
        }
        worst = worst.max((table.synthesize(x).unwrap() - project_periodized(x, &g).unwrap()).abs());
        n += 1;
    }
    ensure(
        hi / lo < 4.0 && worst <= 1e-6,
        format!("L·sup spread {:.3} (bound 4), projection mismatch {worst:.2e} (bound 1e-6)", hi / lo),
    )
}

fn ac4() -> Check {
    let vals: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&r| PairKernelTable::build(&geom(r, 16), 400).unwrap().l2_norm() * r.sqrt())
        .collect();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(0.0, f64::max);
    ensure(hi / lo - 1.0 < 0.25, format!("‖v‖·√r spread {:.1}% (bound 25%)", 100.0 * (hi / lo - 1.0)))
}

fn ac5() -> Check {
    let m = 6i64;
    let p = model(m as usize, 2, 0.0, 0.0);
    let s = spectrum(&p);
    let mut want = Vec::new();
    for a in -m..=m {
        for b in (a + 1)..=m {
            let k = |n: i64| 2.0 * PI * n as f64 / p.geometry.torus_length();
            want.push(0.5 * k(a).powi(2) + 0.5 * k(b).powi(2));
        }
    }
    want.sort_by(f64::total_cmp);
    let got = energies(&s);
    if got.len() != want.len() {
        return Err(format!("{} levels, expected {}", got.len(), want.len()));
    }
    let e_err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let tol = s.degeneracy_tol();
    let w_max = s.transitions().iter().filter(|t| t.delta > tol).map(|t| t.weight).fold(0.0, f64::max);
    let grid = OmegaGrid::default().points();
    let mut abs_max = 0.0f64;
    for lambda in [0.0, 1.0] {
        let s = spectrum(&model(m as usize, 2, lambda, 0.0));
        for &w in &grid {
            abs_max = abs_max.max(absorptive_sum(&s, w, 0.05).unwrap().abs());
        }
    }
    ensure(
        e_err <= 1e-10 && w_max < 1e-12 && abs_max < 1e-12,
        format!("level error {e_err:.1e}, max excited weight {w_max:.1e}, max absorptive sum {abs_max:.1e}"),
    )
}

fn ac6() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for (n, m) in [(1usize, 63usize), (2, 20)] {
        let p = model(m, n, 1.0, 0.5);
        let s = spectrum(&p);
        let fit = weyl_fit(&energies(&s), truncation_clean_cutoff(&p)).map_err(|e| e.to_string())?;
        let want = 2.0 / n as f64;
        let dev = (fit.exponent / want - 1.0).abs();
        ok &= dev <= 0.1;
        parts.push(format!("N={n}: exponent {:.3} vs {want:.3} ({:.1}%)", fit.exponent, 100.0 * dev));
    }
    ensure(ok, parts.join(", "))
}

fn first_line(s: &ModelSpectrum) -> f64 {
    line_spectrum(s, 1e-14).lines[0].omega
}

fn ac7() -> Check {
    let s = reference();
    let gap = s.gap().unwrap();
    let beta = 20.0 / gap;
    let eta = 0.05;
    let w1 = first_line(&s);
    let opts = PropagationOptions::default();
    let mut worst = 0.0f64;
    for f in [0.5, 0.9, 1.0, 1.1, 1.5] {
        let w = f * w1;
        let freq = sigma_finite_beta(&s, beta, w, eta).unwrap().sigma;
        let time = finite_difference_conductivity(&s, beta, w, eta, 1e-4, &opts).map_err(|e| e.to_string())?;
        worst = worst.max(rel_err(time, freq));
    }
    ensure(worst <= 1e-2, format!("max relative difference {worst:.2e} over 5 frequencies around {w1:.4} (bound 1e-2)"))
}

fn ac8() -> Check {
    let s = reference();
    let gap = s.gap().unwrap();
    let (w, eta) = (2.3, 0.05);
    let betas: Vec<f64> = [5.0, 10.0, 20.0, 40.0].iter().map(|f| f / gap).collect();
    let diffs: Vec<f64> = betas
        .iter()
        .map(|&b| sigma_finite_beta(&s, b, w, eta).unwrap().thermal_shift.abs())
        .collect();
    let decreasing = diffs.windows(2).all(|d| d[1] < d[0]);
    let rates: Vec<f64> = (0..3)
        .map(|i| (diffs[i] / diffs[i + 1]).ln() / (betas[i + 1] - betas[i]))
        .collect();
    // The decay rate is read off the asymptotic log-differences, β ≥ 10/gap. At
    // β = 5/gap the level at ~2.5·gap still shifts the first one, by an amount
    // that depends on ω.
    let ok = decreasing && rates[1..].iter().all(|r| (r / gap - 1.0).abs() <= 0.15);
    let shown: Vec<String> = rates.iter().map(|r| format!("{:.4}", r / gap)).collect();
    ensure(
        ok,
        format!("monotone {decreasing}, log-difference rate / gap = [{}] (bound ±15% for β ≥ 10/gap)", shown.join(", ")),
    )
}

fn dominant(lines: &LineSpectrum) -> f64 {
    lines
        .lines
        .iter()
        .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
        .unwrap()
        .omega
}

fn ac9() -> Check {
    let s = reference();
    let gap = s.gap().unwrap();
    let lines = line_spectrum(&s, 1e-14);
    let w0 = dominant(&lines);
    let tol = s.degeneracy_tol();
    let weight: f64 = lines.lines.iter().filter(|l| (l.omega - w0).abs() <= tol).map(|l| l.weight).sum();
    let etas: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|f| f * gap).collect();
    let mut errs = Vec::new();
    for &eta in &etas {
        let peak = find_peak(&s, eta, w0).map_err(|e| e.to_string())?;
        errs.push((peak - w0).abs());
    }
    let shrink = [errs[0] / errs[1], errs[1] / errs[2]];
    let eta = etas[2];
    let height = sigma_leading(&s, w0, eta).unwrap();
    let want = Prefactors::of(&s).absorptive * weight / (eta * w0);
    let h_err = rel_err(height, want);
    ensure(
        shrink.iter().all(|&r| r >= 50.0) && h_err <= 0.05,
        format!(
            "line at {w0:.4}: error shrink {:.0}x, {:.0}x per decade (bound 50x), height deviation {:.2}% (bound 5%)",
            shrink[0],
            shrink[1],
            100.0 * h_err
        ),
    )
}

fn ac10() -> Check {
    let s = reference();
    let gap = s.gap().unwrap();
    let beta = 20.0 / gap;
    let w = first_line(&s);
    let opts = PropagationOptions::default();
    let mut vals = Vec::new();
    for e in [1e-3, 1e-4, 1e-5] {
        vals.push(finite_difference_conductivity(&s, beta, w, 0.05, e, &opts).map_err(|e| e.to_string())?);
    }
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in (i + 1)..3 {
            worst = worst.max(rel_err(vals[i], vals[j]));
        }
    }
    ensure(worst <= 1e-5, format!("max pairwise relative difference {worst:.2e} (bound 1e-5)"))
}

fn main() -> ExitCode {
    let checks: [Criterion; 10] = [
        ("AC-1", ac1),
        ("AC-2", ac2),
        ("AC-3", ac3),
        ("AC-4", ac4),
        ("AC-5", ac5),
        ("AC-6", ac6),
        ("AC-7", ac7),
        ("AC-8", ac8),
        ("AC-9", ac9),
        ("AC-10", ac10),
    ];
    let mut failed = 0;
    for (id, check) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("{id:<6} PASS  {d}  [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("{id:<6} FAIL  {d}  [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
