//! Scalar special functions and quadrature used by the potential kernels.

mod bessel;
mod elliptic;
mod quad;

pub use bessel::{bessel_k0, bessel_k0e};
pub use elliptic::{carlson_rf, elliptic_k, elliptic_k_complement};
pub use quad::{quad_adaptive, quad_log_singular, QuadSpec};
