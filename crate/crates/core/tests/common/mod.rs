//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `K0(x) = ∫₀^∞ exp(-x cosh t) dt`.
pub fn k0_integral(x: f64) -> f64 {
    // Cut where the integrand drops below e^{-750}.
    let t_max = (750.0 / x).max(1.0).acosh() + 1.0;
    simpson(|t| (-x * t.cosh()).exp(), 0.0, t_max, 40_000)
}

/// `I0(x)` by its power series.
pub fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// `K(m) = π / (2 AGM(1, sqrt(1 - m)))`.
pub fn elliptic_k_agm(m: f64) -> f64 {
    let (mut a, mut b) = (1.0f64, (1.0 - m).sqrt());
    for _ in 0..64 {
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
    }
    PI / (2.0 * a)
}

/// Circle projection `(1/2πr)∫ V_r(x, y) dy` by Simpson on the smooth
/// (x != 0) integrand.
pub fn v_r_by_projection(x: f64, r: f64) -> f64 {
    let f = |y: f64| 1.0 / (x * x + 4.0 * r * r * (0.5 * y / r).sin().powi(2)).sqrt();
    simpson(f, 0.0, PI * r, 200_000) / (PI * r)
}

/// Mean of `V_L(x, y)` over one torus cell, `(2/La) asinh(La / 2c)`,
/// projected onto the circle: this is the Fourier mode `m = 0` of `v_{L,r}`.
pub fn mean_coeff_oracle(r: f64, la: f64) -> f64 {
    // Substituting y = πr s² removes the log singularity at y = 0.
    let g = |s: f64| {
        if s == 0.0 {
            return 0.0;
        }
        let y = PI * r * s * s;
        let c = 2.0 * r * (0.5 * y / r).sin();
        (2.0 / la) * (0.5 * la / c).asinh() * 2.0 * s * PI * r
    };
    simpson(g, 0.0, 1.0, 200_000) / (PI * r)
}

/// Fourier mode `m != 0` of `v_{L,r}`: `(2/La) I0(z) K0(z)`, `z = 2πr|m|/La`.
pub fn pair_coeff_oracle(m: i64, r: f64, la: f64) -> f64 {
    let z = 2.0 * PI * r * m.unsigned_abs() as f64 / la;
    (2.0 / la) * i0_series(z) * k0_integral(z)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `-2 ∫_{-∞}^0 a(τ) sin(Δτ) dτ` with `a(τ) = Re(e^{(iω+η)τ}/(iω+η))`, by
/// Simpson's rule on `[-40/η, 0]`.
pub fn kernel_by_quadrature(delta: f64, omega: f64, eta: f64) -> f64 {
    let den = omega * omega + eta * eta;
    let a = |t: f64| (t * eta).exp() * (eta * (omega * t).cos() + omega * (omega * t).sin()) / den;
    let t0 = -40.0 / eta;
    let panels = ((-t0) * (delta.abs() + omega + eta) * 200.0) as usize;
    -2.0 * simpson(|t| a(t) * (delta * t).sin(), t0, 0.0, panels.max(1000))
}
