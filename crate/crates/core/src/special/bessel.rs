//! Modified Bessel function of the second kind, order zero.
//!
//! Two regimes:
//! - `x <= 2`: the ascending series
//!   `K0(x) = -(ln(x/2) + γ) I0(x) + Σ_{k≥1} (x²/4)^k / (k!)² H_k`
//!   where `H_k` is the k-th harmonic number.
//! - `x > 2`: Steed/Temme continued fraction for `K0(x) e^x sqrt(x)`, which is
//!   accurate to machine precision down to the crossover.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_CROSSOVER: f64 = 2.0;
/// Above this `exp(-x)` underflows and K0 is reported as zero.
const UNDERFLOW_ARG: f64 = 745.0;
const MAX_ITER: usize = 10_000;

/// `K0(x)` for `x > 0`, relative error near 1e-15 on `[1e-300, 700]`.
pub fn bessel_k0(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain("bessel_k0", format!("need finite x > 0, got {x}")));
    }
    if x <= SERIES_CROSSOVER {
        Ok(k0_series(x))
    } else if x >= UNDERFLOW_ARG {
        Ok(0.0)
    } else {
        Ok(k0_scaled_cf(x) * (-x).exp())
    }
}

/// Exponentially scaled `K0(x) e^x`, useful where the unscaled value underflows.
pub fn bessel_k0e(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain("bessel_k0e", format!("need finite x > 0, got {x}")));
    }
    if x <= SERIES_CROSSOVER {
        Ok(k0_series(x) * x.exp())
    } else {
        Ok(k0_scaled_cf(x))
    }
}

fn k0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    // term_k = q^k / (k!)^2
    let mut term = 1.0;
    let mut i0 = 1.0;
    let mut harmonic = 0.0;
    let mut tail = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail += term * harmonic;
        if term * harmonic < 1e-17 * tail.abs().max(1e-300) && term < 1e-17 * i0 {
            break;
        }
    }
    -log_term * i0 + tail
}

/// Steed's method (CF2) evaluated at order zero; returns `K0(x) e^x`.
fn k0_scaled_cf(x: f64) -> f64 {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        a -= 2.0 * (i as f64 - 1.0);
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    (std::f64::consts::PI / (2.0 * x)).sqrt() / s
}
