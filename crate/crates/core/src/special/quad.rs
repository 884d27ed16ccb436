//! Globally adaptive 21-point Gauss–Kronrod quadrature.
//!
//! Endpoint logarithmic singularities are handled by repeated bisection: the
//! interval touching the singular point always carries the largest error, so
//! refinement grades geometrically towards it. The rule never samples an
//! endpoint, which keeps the integrand finite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accuracy request for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

impl QuadSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) || self.max_subdivisions < 1 {
            return Err(Error::invalid(format!(
                "quadrature spec needs abs_tol > 0, rel_tol > 0, max_subdivisions >= 1: {self:?}"
            )));
        }
        Ok(())
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// 10-point Gauss weights, paired with the odd entries of XGK.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod_21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abs_half = half.abs();
    let fc = f(center);
    let mut res_g = 0.0;
    let mut res_k = WGK[10] * fc;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for (j, &wg) in WG.iter().enumerate() {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += wg * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= abs_half;
    res_asc *= abs_half;
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, value, error }
}

fn integrate_segments<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], spec: &QuadSpec) -> Result<f64> {
    spec.validate()?;
    let mut segments: Vec<Segment> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gauss_kronrod_21(f, w[0], w[1]))
        .collect();
    if segments.is_empty() {
        return Ok(0.0);
    }
    let mut subdivisions = segments.len();
    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let err: f64 = segments.iter().map(|s| s.error).sum();
        if !total.is_finite() {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                detail: "integrand produced a non-finite value".into(),
            });
        }
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if err <= target {
            return Ok(total);
        }
        // Worst segment that can still be split in floating point.
        let worst = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| {
                let mid = 0.5 * (s.a + s.b);
                mid > s.a && mid < s.b
            })
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i);
        let Some(idx) = worst else {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                detail: format!("intervals exhausted at error {err:e} (target {target:e})"),
            });
        };
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                detail: format!(
                    "{subdivisions} subdivisions used, error {err:e} above target {target:e}"
                ),
            });
        }
        let s = segments.swap_remove(idx);
        let mid = 0.5 * (s.a + s.b);
        segments.push(gauss_kronrod_21(f, s.a, mid));
        segments.push(gauss_kronrod_21(f, mid, s.b));
        subdivisions += 1;
    }
}

/// Adaptive integral of a smooth (or mildly singular) integrand over `[a, b]`.
pub fn quad_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("quad_adaptive", "interval must be finite"));
    }
    if a > b {
        return quad_adaptive(f, b, a, spec).map(|v| -v);
    }
    integrate_segments(&f, &[a, b], spec)
}

/// Integral over `[a, b]` of an integrand with at most a logarithmic
/// singularity at `singular_at`; the interval is split there first.
pub fn quad_log_singular<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    singular_at: f64,
    spec: &QuadSpec,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && singular_at.is_finite()) {
        return Err(Error::domain("quad_log_singular", "interval must be finite"));
    }
    if a > b {
        return quad_log_singular(f, b, a, singular_at, spec).map(|v| -v);
    }
    if singular_at < a || singular_at > b {
        return Err(Error::domain(
            "quad_log_singular",
            format!("singular point {singular_at} outside [{a}, {b}]"),
        ));
    }
    integrate_segments(&f, &[a, singular_at, b], spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn log_endpoint() {
        let v = quad_log_singular(|x: f64| x.ln(), 0.0, 1.0, 0.0, &QuadSpec::default()).unwrap();
        assert!((v + 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn log_sine() {
        let v = quad_log_singular(
            |y: f64| (0.5 * y).sin().abs().ln(),
            0.0,
            PI,
            0.0,
            &QuadSpec::default(),
        )
        .unwrap();
        assert!((v + PI * LN_2).abs() < 1e-11, "{v}");
    }

    #[test]
    fn constant() {
        let v = quad_adaptive(|_| 1.0, 0.0, 1.0, &QuadSpec::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interior_singularity() {
        // ∫_{-1}^{2} ln|x| dx = 2 ln 2 - 3
        let v = quad_log_singular(|x: f64| x.abs().ln(), -1.0, 2.0, 0.0, &QuadSpec::default())
            .unwrap();
        assert!((v - (2.0 * LN_2 - 3.0)).abs() < 1e-11);
    }

    #[test]
    fn budget_exhaustion_reported() {
        let spec = QuadSpec::new(1e-15, 1e-15, 2).unwrap();
        let r = quad_log_singular(|x: f64| x.ln(), 0.0, 1.0, 0.0, &spec);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn invalid_spec() {
        assert!(QuadSpec::new(0.0, 1e-10, 10).is_err());
        assert!(QuadSpec::new(1e-10, -1.0, 10).is_err());
        assert!(QuadSpec::new(1e-10, 1e-10, 0).is_err());
    }

    #[test]
    fn reversed_bounds() {
        let v = quad_adaptive(|x: f64| x, 1.0, 0.0, &QuadSpec::default()).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }
}
