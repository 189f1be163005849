//! Mass and nutrient sources `(h, b)` with certified bounds.
//!
//! The admissible class asks for `|h| <= H` with `H / ell < 1`, bounded
//! partial derivatives `|h_phi| <= C_h1`, `(1 + sigma)|h_sigma| <= C_h2`, and
//! the band `-b0 sigma <= b <= b_inf (1 + sigma)`. The concrete families
//! below are constructed to sit inside that class; [`validate_sources`]
//! checks any spec by dense sampling.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ChbError, Result};

pub type SourceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Constants handed to the built-in families.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceConstants {
    /// Bound `H` on `|h|`.
    #[serde(default)]
    pub h_max: f64,
    #[serde(default)]
    pub b0: f64,
    #[serde(default)]
    pub b_inf: f64,
}

/// A source pair `(h(sigma, phi), b(sigma, phi))` with its constants.
///
/// `b` is stored through the split `b = b_plus - sigma b_minus` with both
/// parts nonnegative; the nutrient step treats the decay part implicitly.
#[derive(Clone)]
pub struct SourceSpec {
    pub name: String,
    h: SourceFn,
    b_plus: SourceFn,
    b_minus: SourceFn,
    pub h_max: f64,
    pub c_h1: f64,
    pub c_h2: f64,
    pub b0: f64,
    pub b_inf: f64,
}

impl fmt::Debug for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceSpec")
            .field("name", &self.name)
            .field("h_max", &self.h_max)
            .field("c_h1", &self.c_h1)
            .field("c_h2", &self.c_h2)
            .field("b0", &self.b0)
            .field("b_inf", &self.b_inf)
            .finish()
    }
}

fn zero_fn() -> SourceFn {
    Arc::new(|_, _| 0.0)
}

impl SourceSpec {
    pub fn zero() -> Self {
        Self {
            name: "zero".into(),
            h: zero_fn(),
            b_plus: zero_fn(),
            b_minus: zero_fn(),
            h_max: 0.0,
            c_h1: 0.0,
            c_h2: 0.0,
            b0: 0.0,
            b_inf: 0.0,
        }
    }

    /// A user-supplied `h` with claimed constants; `b` stays zero.
    pub fn custom_h(
        name: &str,
        h: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        h_max: f64,
        c_h1: f64,
        c_h2: f64,
    ) -> Self {
        Self {
            name: name.into(),
            h: Arc::new(h),
            h_max,
            c_h1,
            c_h2,
            ..Self::zero()
        }
    }

    /// A user-supplied `b`, split with the constant decay rate `b0`
    /// (`b_plus = b + b0 sigma`, nonnegative whenever `b` is in the band).
    pub fn custom_b(
        name: &str,
        b: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        b0: f64,
        b_inf: f64,
    ) -> Self {
        let b = Arc::new(b);
        Self {
            name: name.into(),
            b_plus: Arc::new(move |s, p| b(s, p) + b0 * s),
            b_minus: Arc::new(move |_, _| b0),
            b0,
            b_inf,
            ..Self::zero()
        }
    }

    /// Takes `h` from `self` and `b` from `other`.
    pub fn with_b_from(self, other: &SourceSpec) -> Self {
        Self {
            name: format!("{}+{}", self.name, other.name),
            b_plus: other.b_plus.clone(),
            b_minus: other.b_minus.clone(),
            b0: other.b0,
            b_inf: other.b_inf,
            ..self
        }
    }

    #[inline]
    pub fn h(&self, sigma: f64, phi: f64) -> f64 {
        (self.h)(sigma, phi)
    }

    #[inline]
    pub fn b(&self, sigma: f64, phi: f64) -> f64 {
        (self.b_plus)(sigma, phi) - sigma * (self.b_minus)(sigma, phi)
    }

    #[inline]
    pub fn b_plus(&self, sigma: f64, phi: f64) -> f64 {
        (self.b_plus)(sigma, phi)
    }

    #[inline]
    pub fn b_minus(&self, sigma: f64, phi: f64) -> f64 {
        (self.b_minus)(sigma, phi)
    }

    /// `H / ell`, which the admissible class requires to be below one.
    pub fn h_ratio(&self, ell: f64) -> f64 {
        self.h_max / ell
    }

    pub fn check_compatibility(&self, ell: f64) -> Result<()> {
        if !(ell > 0.0) {
            return Err(ChbError::Config(format!("ell must be positive, got {ell}")));
        }
        if self.h_ratio(ell) >= 1.0 {
            return Err(ChbError::Config(format!(
                "source compatibility H/ell < 1 violated: H = {}, ell = {ell}, H/ell = {}",
                self.h_max,
                self.h_ratio(ell)
            )));
        }
        Ok(())
    }
}

/// Names accepted by [`builtin_sources`].
pub const BUILTIN_SOURCES: [&str; 5] = [
    "zero",
    "constant_h",
    "logistic_h_saturating",
    "linear_b",
    "logistic_b",
];

/// Built-in source families.
///
/// * `zero`: `h = b = 0`.
/// * `constant_h`: `h = H`, `b = 0` (a source whose mean is known in advance).
/// * `logistic_h_saturating`: `h = H tanh(sigma/(1+sigma)) / (1+phi^2)`.
/// * `linear_b`: `b = b_inf - b0 sigma`.
/// * `logistic_b`: `b = b_inf sigma/(1+sigma) (1+tanh phi)/2 - b0 sigma^2/(1+sigma)`.
pub fn builtin_sources(name: &str, c: SourceConstants, ell: f64) -> Result<SourceSpec> {
    for (label, v) in [("h_max", c.h_max), ("b0", c.b0), ("b_inf", c.b_inf)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(ChbError::Config(format!("source constant {label} must be >= 0, got {v}")));
        }
    }
    let SourceConstants { h_max, b0, b_inf } = c;
    let spec = match name {
        "zero" => SourceSpec::zero(),
        "constant_h" => SourceSpec {
            name: name.into(),
            h: Arc::new(move |_, _| h_max),
            h_max,
            ..SourceSpec::zero()
        },
        "logistic_h_saturating" => SourceSpec {
            name: name.into(),
            h: Arc::new(move |s, p| h_max * (s / (1.0 + s)).tanh() / (1.0 + p * p)),
            h_max,
            // max |d/dphi 1/(1+phi^2)| = 3 sqrt(3) / 8
            c_h1: h_max * 3.0 * 3f64.sqrt() / 8.0,
            c_h2: h_max,
            ..SourceSpec::zero()
        },
        "linear_b" => SourceSpec {
            name: name.into(),
            b_plus: Arc::new(move |_, _| b_inf),
            b_minus: Arc::new(move |_, _| b0),
            b0,
            b_inf,
            ..SourceSpec::zero()
        },
        "logistic_b" => SourceSpec {
            name: name.into(),
            b_plus: Arc::new(move |s, p| b_inf * s / (1.0 + s) * 0.5 * (1.0 + p.tanh())),
            b_minus: Arc::new(move |s, _| b0 * s / (1.0 + s)),
            b0,
            b_inf,
            ..SourceSpec::zero()
        },
        other => {
            return Err(ChbError::Config(format!(
                "unknown source family {other:?}; expected one of {BUILTIN_SOURCES:?}"
            )))
        }
    };
    spec.check_compatibility(ell)?;
    Ok(spec)
}

/// Outcome of [`validate_sources`].
#[derive(Clone, Debug, Serialize)]
pub struct SourceReport {
    pub name: String,
    pub samples: usize,
    pub h_over_ell: f64,
    pub max_abs_h: f64,
    pub h_bound: f64,
    pub max_abs_h_phi: f64,
    pub c_h1: f64,
    pub max_weighted_h_sigma: f64,
    pub c_h2: f64,
    pub b_band_violations: usize,
    pub split_violations: usize,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// First two coordinates of the Sobol sequence (Gray-code construction).
pub fn sobol_2d(count: usize) -> Vec<(f64, f64)> {
    const BITS: usize = 32;
    let mut v1 = [0u32; BITS];
    let mut v2 = [0u32; BITS];
    for k in 0..BITS {
        v1[k] = 1 << (31 - k);
        v2[k] = if k == 0 { 1 << 31 } else { v2[k - 1] ^ (v2[k - 1] >> 1) };
    }
    let (mut x, mut y) = (0u32, 0u32);
    let scale = 1.0 / 4_294_967_296.0;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        out.push((x as f64 * scale, y as f64 * scale));
        let c = (!i).trailing_zeros() as usize;
        if c < BITS {
            x ^= v1[c];
            y ^= v2[c];
        }
    }
    out
}

/// Samples the spec on `sigma in [0, sigma_max]`, `phi in [-2, 2]` and checks
/// every bound of the admissible class. Derivatives use central differences.
pub fn validate_sources(spec: &SourceSpec, ell: f64, samples: usize, sigma_max: f64) -> SourceReport {
    const FD: f64 = 1e-6;
    const SLACK: f64 = 1e-6;
    let mut max_abs_h: f64 = 0.0;
    let mut max_h_phi: f64 = 0.0;
    let mut max_h_sigma: f64 = 0.0;
    let mut band = 0;
    let mut split = 0;
    for (u, v) in sobol_2d(samples) {
        let sigma = u * sigma_max;
        let phi = -2.0 + 4.0 * v;
        max_abs_h = max_abs_h.max(spec.h(sigma, phi).abs());
        let h_phi = (spec.h(sigma, phi + FD) - spec.h(sigma, phi - FD)) / (2.0 * FD);
        max_h_phi = max_h_phi.max(h_phi.abs());
        let s_lo = (sigma - FD).max(0.0);
        let h_sigma = (spec.h(sigma + FD, phi) - spec.h(s_lo, phi)) / (sigma + FD - s_lo);
        max_h_sigma = max_h_sigma.max((1.0 + sigma) * h_sigma.abs());
        let b = spec.b(sigma, phi);
        let tol = 1e-12 * (1.0 + sigma);
        if b < -spec.b0 * sigma - tol || b > spec.b_inf * (1.0 + sigma) + tol {
            band += 1;
        }
        if spec.b_plus(sigma, phi) < -tol || spec.b_minus(sigma, phi) < 0.0 {
            split += 1;
        }
    }
    let h_over_ell = spec.h_ratio(ell);
    let mut failures = Vec::new();
    if !(h_over_ell < 1.0) {
        failures.push(format!("H/ell = {h_over_ell} is not below 1"));
    }
    if max_abs_h > spec.h_max * (1.0 + SLACK) + 1e-14 {
        failures.push(format!("max |h| = {max_abs_h} exceeds H = {}", spec.h_max));
    }
    if max_h_phi > spec.c_h1 * (1.0 + SLACK) + SLACK {
        failures.push(format!("max |h_phi| = {max_h_phi} exceeds C_h1 = {}", spec.c_h1));
    }
    if max_h_sigma > spec.c_h2 * (1.0 + SLACK) + SLACK {
        failures.push(format!(
            "max (1+sigma)|h_sigma| = {max_h_sigma} exceeds C_h2 = {}",
            spec.c_h2
        ));
    }
    if band > 0 {
        failures.push(format!("b leaves the band -b0 sigma <= b <= b_inf (1+sigma) at {band} samples"));
    }
    if split > 0 {
        failures.push(format!("decay split has a negative part at {split} samples"));
    }
    SourceReport {
        name: spec.name.clone(),
        samples,
        h_over_ell,
        max_abs_h,
        h_bound: spec.h_max,
        max_abs_h_phi: max_h_phi,
        c_h1: spec.c_h1,
        max_weighted_h_sigma: max_h_sigma,
        c_h2: spec.c_h2,
        b_band_violations: band,
        split_violations: split,
        pass: failures.is_empty(),
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(h_max: f64, b0: f64, b_inf: f64) -> SourceConstants {
        SourceConstants { h_max, b0, b_inf }
    }

    #[test]
    fn zero_sources_pass() {
        let spec = builtin_sources("zero", SourceConstants::default(), 1.0).unwrap();
        assert_eq!(spec.h(3.0, 0.2), 0.0);
        assert_eq!(spec.b(3.0, 0.2), 0.0);
        let r = validate_sources(&spec, 1.0, 1000, 100.0);
        assert!(r.pass, "{:?}", r.failures);
        assert_eq!(r.h_over_ell, 0.0);
    }

    #[test]
    fn logistic_h_passes() {
        let spec = builtin_sources("logistic_h_saturating", consts(0.5, 0.0, 0.0), 1.0).unwrap();
        let r = validate_sources(&spec, 1.0, 10_000, 100.0);
        assert!(r.pass, "{:?}", r.failures);
        assert!(r.max_abs_h <= 0.5);
    }

    #[test]
    fn linear_b_band() {
        let spec = builtin_sources("linear_b", consts(0.0, 1.0, 1.0), 1.0).unwrap();
        for k in 0..100 {
            let s = 0.37 * k as f64;
            let b = spec.b(s, 0.3);
            assert!((b - (1.0 - s)).abs() < 1e-12);
            assert!(-s <= b && b <= 1.0 + s);
        }
        assert!(validate_sources(&spec, 1.0, 4096, 100.0).pass);
    }

    #[test]
    fn logistic_b_passes_dense_sampling() {
        let spec = builtin_sources("logistic_b", consts(0.0, 0.7, 2.0), 1.0).unwrap();
        let r = validate_sources(&spec, 1.0, 10_000, 100.0);
        assert!(r.pass, "{:?}", r.failures);
    }

    #[test]
    fn unbounded_h_fails() {
        let ell = 1.0;
        let spec = SourceSpec::custom_h("bad", move |_, p| 2.0 * ell * p, 0.5, 2.0 * ell, 0.0);
        let r = validate_sources(&spec, ell, 1000, 10.0);
        assert!(!r.pass);
        assert!(r.failures.iter().any(|f| f.contains("max |h|")));
    }

    #[test]
    fn incompatible_h_bound_is_config_error() {
        let err = builtin_sources("constant_h", consts(1.5, 0.0, 0.0), 1.0).unwrap_err();
        assert!(matches!(err, ChbError::Config(m) if m.contains("H/ell < 1")));
    }

    #[test]
    fn unknown_family() {
        assert!(builtin_sources("quadratic", SourceConstants::default(), 1.0).is_err());
    }

    #[test]
    fn sobol_points_fill_the_square() {
        let pts = sobol_2d(1024);
        assert_eq!(pts[0], (0.0, 0.0));
        assert_eq!(pts[1], (0.5, 0.5));
        // every 1/32 x 1/32 box holds exactly one point (a (0,10,2)-net)
        let mut boxes = vec![0; 1024];
        for (x, y) in pts {
            boxes[(x * 32.0) as usize + 32 * (y * 32.0) as usize] += 1;
        }
        assert!(boxes.iter().all(|&c| c == 1));
    }

    #[test]
    fn combined_spec() {
        let h = builtin_sources("constant_h", consts(0.25, 0.0, 0.0), 1.0).unwrap();
        let b = builtin_sources("linear_b", consts(0.0, 2.0, 1.0), 1.0).unwrap();
        let both = h.with_b_from(&b);
        assert_eq!(both.h(1.0, 0.0), 0.25);
        assert_eq!(both.b(1.0, 0.0), -1.0);
        assert_eq!(both.b0, 2.0);
    }
}
