//! Complete elliptic integral of the first kind, parameter convention:
//! `K(m) = ∫₀^{π/2} dθ / sqrt(1 - m sin²θ)`.
//!
//! Evaluated through Carlson's symmetric form `K(m) = R_F(0, 1 - m, 1)`.

use crate::error::{Error, Result};

/// `K(m)` for `0 <= m < 1`.
pub fn elliptic_k(m: f64) -> Result<f64> {
    if !m.is_finite() || !(0.0..1.0).contains(&m) {
        return Err(Error::domain("elliptic_k", format!("need 0 <= m < 1, got {m}")));
    }
    carlson_rf(0.0, 1.0 - m, 1.0)
}

/// `K` expressed through the complementary parameter `mc = 1 - m`.
///
/// Avoids the cancellation in `1 - m` when `m` is within rounding of one.
pub fn elliptic_k_complement(mc: f64) -> Result<f64> {
    if !mc.is_finite() || mc <= 0.0 || mc > 1.0 {
        return Err(Error::domain(
            "elliptic_k_complement",
            format!("need 0 < 1 - m <= 1, got {mc}"),
        ));
    }
    carlson_rf(0.0, mc, 1.0)
}

/// Carlson's `R_F(x, y, z)` by duplication; at most one argument may vanish.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> Result<f64> {
    const ERRTOL: f64 = 0.0008;
    if x < 0.0 || y < 0.0 || z < 0.0 {
        return Err(Error::domain("carlson_rf", "negative argument"));
    }
    if (x == 0.0) as u8 + (y == 0.0) as u8 + (z == 0.0) as u8 > 1 {
        return Err(Error::domain("carlson_rf", "two arguments vanish"));
    }
    let (mut xt, mut yt, mut zt) = (x, y, z);
    for _ in 0..200 {
        let (sx, sy, sz) = (xt.sqrt(), yt.sqrt(), zt.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        xt = 0.25 * (xt + lambda);
        yt = 0.25 * (yt + lambda);
        zt = 0.25 * (zt + lambda);
        let ave = (xt + yt + zt) / 3.0;
        let dx = (ave - xt) / ave;
        let dy = (ave - yt) / ave;
        let dz = (ave - zt) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) <= ERRTOL {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return Ok((1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / ave.sqrt());
        }
    }
    Err(Error::NonConvergence {
        what: "carlson_rf",
        detail: format!("duplication did not settle for ({x}, {y}, {z})"),
    })
}
