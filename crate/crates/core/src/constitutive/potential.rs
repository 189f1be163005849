//! Logarithmic double-well potential and its monotone part.

use crate::error::{ChbError, Result};

fn check_open_interval(function: &'static str, r: f64) -> Result<()> {
    if r > -1.0 && r < 1.0 {
        Ok(())
    } else {
        Err(ChbError::Domain { function, value: r })
    }
}

/// Convex part `(1+r) ln(1+r) + (1-r) ln(1-r)` of the potential.
pub fn log_convex(r: f64) -> Result<f64> {
    check_open_interval("F", r)?;
    Ok((1.0 + r) * r.ln_1p() + (1.0 - r) * (-r).ln_1p())
}

/// `F(r) = (1+r) ln(1+r) + (1-r) ln(1-r) - lambda/2 r^2`.
pub fn potential_big_f(r: f64, lambda: f64) -> Result<f64> {
    Ok(log_convex(r)? - 0.5 * lambda * r * r)
}

/// Monotone part `beta(r) = ln(1+r) - ln(1-r)`.
pub fn beta(r: f64) -> Result<f64> {
    check_open_interval("beta", r)?;
    Ok(r.ln_1p() - (-r).ln_1p())
}

/// `beta'(r) = 2 / (1 - r^2)`.
pub fn beta_prime(r: f64) -> Result<f64> {
    check_open_interval("beta'", r)?;
    Ok(2.0 / ((1.0 - r) * (1.0 + r)))
}

/// `f = F' = beta - lambda r`.
pub fn potential_f(r: f64, lambda: f64) -> Result<f64> {
    Ok(beta(r)? - lambda * r)
}
