//! Degenerate chemotactic sensitivity and its entropy variables.

use serde::{Deserialize, Serialize};

use crate::error::{ChbError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityParams {
    /// Summability exponent, `1 < p <= 2`.
    pub p: f64,
    /// Chemotactic coefficient.
    pub chi: f64,
}

impl SensitivityParams {
    pub fn new(p: f64, chi: f64) -> Result<Self> {
        let s = Self { p, chi };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p <= 2.0) {
            return Err(ChbError::Config(format!("p must lie in (1, 2], got {}", self.p)));
        }
        if !(self.chi >= 0.0 && self.chi.is_finite()) {
            return Err(ChbError::Config(format!("chi must be >= 0, got {}", self.chi)));
        }
        Ok(())
    }

    /// Growth exponent at infinity, `a = 2 - p`.
    pub fn a(&self) -> f64 {
        2.0 - self.p
    }

    /// Conjugate exponent `p' = p / (p - 1)`.
    pub fn p_conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// Whether `p` lies in the three-dimensional range `(12/11, 2]`.
    pub fn in_3d_range(&self) -> bool {
        self.p > 12.0 / 11.0 && self.p <= 2.0
    }

    pub fn alpha(&self, s: f64) -> Result<f64> {
        alpha(s, self.p)
    }

    pub fn gamma(&self, s: f64) -> Result<f64> {
        gamma(s, self.p)
    }

    pub fn gamma_hat(&self, s: f64) -> Result<f64> {
        gamma_hat(s, self.p)
    }
}

/// `alpha(s) = s / (1 + s^(p-1))`, degenerate at zero.
pub fn alpha(s: f64, p: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(ChbError::Domain {
            function: "alpha",
            value: s,
        });
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(s / (1.0 + s.powf(p - 1.0)))
}

/// Reciprocal mobility `1/alpha(s) = 1/s + s^(p-2)`.
pub fn alpha_reciprocal(s: f64, p: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(ChbError::Domain {
            function: "1/alpha",
            value: s,
        });
    }
    Ok(1.0 / s + s.powf(p - 2.0))
}

/// `alpha'(s) = (1 + (2-p) s^(p-1)) / (1 + s^(p-1))^2`.
pub fn alpha_prime(s: f64, p: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(ChbError::Domain {
            function: "alpha'",
            value: s,
        });
    }
    let t = s.powf(p - 1.0);
    Ok((1.0 + (2.0 - p) * t) / ((1.0 + t) * (1.0 + t)))
}

/// Entropy variable `gamma(s) = ln s + (s^(p-1) - 1)/(p-1)`, the primitive of
/// `1/alpha` vanishing at 1.
pub fn gamma(s: f64, p: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(ChbError::Domain {
            function: "gamma",
            value: s,
        });
    }
    Ok(s.ln() + (s.powf(p - 1.0) - 1.0) / (p - 1.0))
}

/// `gamma_hat(s) = s^p/(p(p-1)) + s ln s - p s/(p-1) + (p+1)/p`, the
/// primitive of `gamma` vanishing at 1. Extended by continuity to `s = 0`.
pub fn gamma_hat(s: f64, p: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(ChbError::Domain {
            function: "gamma_hat",
            value: s,
        });
    }
    let xlogx = if s == 0.0 { 0.0 } else { s * s.ln() };
    // grouped so that every term vanishes exactly at s = 1
    Ok((s.powf(p) - 1.0 - p * (s - 1.0)) / (p * (p - 1.0)) + xlogx - (s - 1.0))
}
