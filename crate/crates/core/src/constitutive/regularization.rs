//! Smooth approximation `beta_n = yosida(beta, 1/n) + j_n` of the singular
//! monotone graph, and the matching potential `F_n`.
//!
//! The resolvent `r + beta(r)/n = s` is solved in the variable
//! `y = beta(r)` (so `r = tanh(y/2)`), which removes the logarithmic
//! singularity: `g(y) = tanh(y/2) + y/n - s` is smooth and strictly
//! increasing for every `s`, and the Yosida value is `y` itself.

use serde::{Deserialize, Serialize};

use super::potential::{beta, beta_prime, log_convex};
use super::quadrature::integrate;
use crate::error::{ChbError, Result};

/// Absolute tolerance for the Yosida primitive quadrature.
pub const PRIMITIVE_QUAD_TOL: f64 = 1e-10;
/// Residual tolerance of the resolvent solve (scaled by `max(1, |s|)`).
pub const RESOLVENT_TOL: f64 = 1e-12;
const RESOLVENT_MAX_ITER: usize = 200;

/// How the singular potential is treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularization {
    ExactLog,
    BetaN { n: u32 },
}

impl Regularization {
    pub fn index(&self) -> Option<u32> {
        match self {
            Regularization::ExactLog => None,
            Regularization::BetaN { n } => Some(*n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    pub lambda: f64,
    pub regularization: Regularization,
    /// Growth exponent of the penalty, `q0 > 2`.
    pub q0: f64,
    /// Power of `n` in the penalty; `8 q0` when unset.
    pub penalty_exponent: Option<f64>,
}

impl PotentialParams {
    pub fn exact(lambda: f64) -> Self {
        Self {
            lambda,
            regularization: Regularization::ExactLog,
            q0: 3.0,
            penalty_exponent: None,
        }
    }

    pub fn regularized(lambda: f64, n: u32, q0: f64) -> Self {
        Self {
            lambda,
            regularization: Regularization::BetaN { n },
            q0,
            penalty_exponent: None,
        }
    }

    pub fn penalty_power(&self) -> f64 {
        self.penalty_exponent.unwrap_or(8.0 * self.q0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(ChbError::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.q0 > 2.0 && self.q0.is_finite()) {
            return Err(ChbError::Config(format!("q0 must exceed 2, got {}", self.q0)));
        }
        if let Regularization::BetaN { n } = self.regularization {
            if n == 0 {
                return Err(ChbError::Config("regularization index must be >= 1".into()));
            }
        }
        if let Some(e) = self.penalty_exponent {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(ChbError::Config(format!("penalty exponent must be >= 0, got {e}")));
            }
        }
        Ok(())
    }
}

fn resolvent_residual(y: f64, n: f64, s: f64) -> f64 {
    (0.5 * y).tanh() + y / n - s
}

/// Solves `tanh(y/2) + y/n = s` for `s >= 0` by safeguarded Newton.
fn resolvent_y(s: f64, n: f64) -> Result<f64> {
    debug_assert!(s >= 0.0);
    if s == 0.0 {
        return Ok(0.0);
    }
    let tol = RESOLVENT_TOL * s.max(1.0);
    let mut lo = (n * (s - 1.0)).max(0.0);
    let mut hi = n * s;
    // initial guess: the exact beta of s when it lies in the bracket
    let mut y = if s < 1.0 {
        (2.0 * s.atanh()).clamp(lo, hi)
    } else {
        lo + 0.5 * (hi - lo).min(2.0 * n)
    };
    for _ in 0..RESOLVENT_MAX_ITER {
        let g = resolvent_residual(y, n, s);
        if g.abs() <= tol {
            return Ok(y);
        }
        if g > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let sech = 1.0 / (0.5 * y).cosh();
        let dg = 0.5 * sech * sech + 1.0 / n;
        let newton = y - g / dg;
        y = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            return Ok(y);
        }
    }
    Err(ChbError::NoConvergence {
        solver: "Yosida resolvent",
        iterations: RESOLVENT_MAX_ITER,
        residual: resolvent_residual(y, n, s).abs(),
        history: Vec::new(),
    })
}

fn check_index(n: u32) -> Result<f64> {
    if n == 0 {
        Err(ChbError::Domain {
            function: "yosida_beta (index)",
            value: 0.0,
        })
    } else {
        Ok(n as f64)
    }
}

/// Yosida approximation of `beta` with index `1/n`: `n (s - r)` where
/// `r + beta(r)/n = s`.
pub fn yosida_beta(s: f64, n: u32) -> Result<f64> {
    let nf = check_index(n)?;
    if !s.is_finite() {
        return Err(ChbError::Domain {
            function: "yosida_beta",
            value: s,
        });
    }
    Ok(s.signum() * resolvent_y(s.abs(), nf)?)
}

/// Derivative of [`yosida_beta`]: `1 / (1/beta'(r) + 1/n)`.
pub fn yosida_beta_prime(s: f64, n: u32) -> Result<f64> {
    let nf = check_index(n)?;
    let y = yosida_beta(s, n)?;
    let sech = 1.0 / (0.5 * y).cosh();
    Ok(1.0 / (0.5 * sech * sech + 1.0 / nf))
}

/// Primitive of the Yosida approximation in closed form (Moreau envelope
/// of the convex part): `B(r) + n/2 (s - r)^2` at the resolvent point `r`.
pub fn yosida_primitive_closed_form(s: f64, n: u32) -> Result<f64> {
    let nf = check_index(n)?;
    let y = resolvent_y(s.abs(), nf)?;
    let r = (0.5 * y).tanh();
    // B(r) = (1+r)ln(1+r) + (1-r)ln(1-r), rewritten to survive r -> 1
    let b = if r < 1.0 - 1e-6 {
        log_convex(r)?
    } else {
        let one_minus = 2.0 / (1.0 + y.exp());
        (1.0 + r) * (1.0 + r).ln() + if one_minus > 0.0 { one_minus * one_minus.ln() } else { 0.0 }
    };
    let d = y / nf;
    Ok(b + 0.5 * nf * d * d)
}

/// Penalty `j_n` that confines the regularised order parameter to `[-1, 1]`.
#[derive(Clone, Copy, Debug)]
pub struct Penalty {
    q0: f64,
    scale: f64,
}

impl Penalty {
    pub fn new(n: u32, q0: f64, exponent: f64) -> Result<Self> {
        let scale = (n as f64).powf(exponent);
        if !scale.is_finite() {
            return Err(ChbError::Numeric(format!(
                "penalty scale n^{exponent} overflows for n = {n}"
            )));
        }
        Ok(Self { q0, scale })
    }

    /// Uses the default exponent `8 q0`.
    pub fn standard(n: u32, q0: f64) -> Result<Self> {
        Self::new(n, q0, 8.0 * q0)
    }

    fn excess(s: f64) -> f64 {
        (s.abs() - 1.0).max(0.0)
    }

    fn finite(v: f64, s: f64) -> Result<f64> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ChbError::Numeric(format!("penalty overflow at s = {s}")))
        }
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        let e = Self::excess(s);
        if e == 0.0 {
            return Ok(0.0);
        }
        Self::finite(s.signum() * self.q0 * self.scale * e.powf(self.q0 - 1.0), s)
    }

    pub fn derivative(&self, s: f64) -> Result<f64> {
        let e = Self::excess(s);
        if e == 0.0 {
            return Ok(0.0);
        }
        Self::finite(self.q0 * (self.q0 - 1.0) * self.scale * e.powf(self.q0 - 2.0), s)
    }

    /// Primitive vanishing on `[-1, 1]`: `n^e (|s| - 1)^q0` outside.
    pub fn primitive(&self, s: f64) -> Result<f64> {
        let e = Self::excess(s);
        if e == 0.0 {
            return Ok(0.0);
        }
        Self::finite(self.scale * e.powf(self.q0), s)
    }
}

/// `j_n(s)` with the default exponent.
pub fn penalty_j(s: f64, n: u32, q0: f64) -> Result<f64> {
    Penalty::standard(n, q0)?.value(s)
}

pub fn penalty_j_primitive(s: f64, n: u32, q0: f64) -> Result<f64> {
    Penalty::standard(n, q0)?.primitive(s)
}

fn regularized_index(prm: &PotentialParams) -> Result<u32> {
    prm.regularization
        .index()
        .ok_or_else(|| ChbError::Config("beta_n requires a regularized potential".into()))
}

/// `beta_n(s) = yosida_beta(s, n) + j_n(s)`.
pub fn beta_n(s: f64, prm: &PotentialParams) -> Result<f64> {
    let n = regularized_index(prm)?;
    Ok(yosida_beta(s, n)? + Penalty::new(n, prm.q0, prm.penalty_power())?.value(s)?)
}

/// Primitive of `beta_n` vanishing at zero, by direct quadrature of the
/// Yosida part plus the closed-form penalty primitive.
pub fn beta_n_primitive(s: f64, prm: &PotentialParams) -> Result<f64> {
    let n = regularized_index(prm)?;
    let a = s.abs();
    let g = integrate(|t| yosida_beta(t, n), 0.0, a, PRIMITIVE_QUAD_TOL)?;
    Ok(g + Penalty::new(n, prm.q0, prm.penalty_power())?.primitive(s)?)
}

/// `F_n(s) = int_0^s beta_n - lambda/2 s^2`.
pub fn big_f_n(s: f64, prm: &PotentialParams) -> Result<f64> {
    Ok(beta_n_primitive(s, prm)? - 0.5 * prm.lambda * s * s)
}

/// Cubic Hermite table of the (even) Yosida primitive on `[0, len]`.
#[derive(Clone, Debug)]
struct PrimitiveTable {
    n: u32,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl PrimitiveTable {
    const HALF_WIDTH: f64 = 2.0;

    fn build(n: u32) -> Result<Self> {
        // Hermite error ~ step^4 max|G''''| / 384 with G'''' = O(n^3) near |s| = 1
        let step_target = (0.0249 / (n as f64).powf(0.75)).min(1e-2);
        let knots = (Self::HALF_WIDTH / step_target).ceil() as usize;
        let step = Self::HALF_WIDTH / knots as f64;
        let mut values = Vec::with_capacity(knots + 1);
        let mut slopes = Vec::with_capacity(knots + 1);
        let mut acc = 0.0;
        values.push(0.0);
        slopes.push(0.0);
        for k in 1..=knots {
            let (a, b) = ((k - 1) as f64 * step, k as f64 * step);
            acc += integrate(|t| yosida_beta(t, n), a, b, PRIMITIVE_QUAD_TOL / knots as f64)?;
            values.push(acc);
            slopes.push(yosida_beta(b, n)?);
        }
        Ok(Self {
            n,
            step,
            values,
            slopes,
        })
    }

    fn eval(&self, s: f64) -> Result<f64> {
        let a = s.abs();
        let last = self.values.len() - 1;
        if a >= Self::HALF_WIDTH {
            let tail = integrate(
                |t| yosida_beta(t, self.n),
                Self::HALF_WIDTH,
                a,
                PRIMITIVE_QUAD_TOL,
            )?;
            return Ok(self.values[last] + tail);
        }
        let k = ((a / self.step) as usize).min(last - 1);
        let t = (a - k as f64 * self.step) / self.step;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(h00 * self.values[k]
            + h10 * self.step * self.slopes[k]
            + h01 * self.values[k + 1]
            + h11 * self.step * self.slopes[k + 1])
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Exact,
    Regularized {
        n: u32,
        penalty: Penalty,
        table: PrimitiveTable,
    },
}

/// The potential used in the time stepper: either the exact logarithmic
/// one or `F_n`, with the regularised primitive tabulated once.
#[derive(Clone, Debug)]
pub struct Potential {
    params: PotentialParams,
    kind: Kind,
}

impl Potential {
    pub fn new(params: PotentialParams) -> Result<Self> {
        params.validate()?;
        let kind = match params.regularization {
            Regularization::ExactLog => Kind::Exact,
            Regularization::BetaN { n } => Kind::Regularized {
                n,
                penalty: Penalty::new(n, params.q0, params.penalty_power())?,
                table: PrimitiveTable::build(n)?,
            },
        };
        Ok(Self { params, kind })
    }

    pub fn params(&self) -> &PotentialParams {
        &self.params
    }

    pub fn lambda(&self) -> f64 {
        self.params.lambda
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.kind, Kind::Exact)
    }

    /// `1/n` for the regularised potential, 0 otherwise.
    pub fn inverse_index(&self) -> f64 {
        match &self.kind {
            Kind::Exact => 0.0,
            Kind::Regularized { n, .. } => 1.0 / *n as f64,
        }
    }

    /// Whether `s` lies in the domain of the monotone part.
    pub fn admissible(&self, s: f64) -> bool {
        match self.kind {
            Kind::Exact => s > -1.0 && s < 1.0,
            Kind::Regularized { .. } => s.is_finite(),
        }
    }

    /// `beta` or `beta_n`.
    pub fn monotone(&self, s: f64) -> Result<f64> {
        match &self.kind {
            Kind::Exact => beta(s),
            Kind::Regularized { n, penalty, .. } => Ok(yosida_beta(s, *n)? + penalty.value(s)?),
        }
    }

    pub fn monotone_prime(&self, s: f64) -> Result<f64> {
        match &self.kind {
            Kind::Exact => beta_prime(s),
            Kind::Regularized { n, penalty, .. } => {
                Ok(yosida_beta_prime(s, *n)? + penalty.derivative(s)?)
            }
        }
    }

    /// Primitive of the monotone part vanishing at zero.
    pub fn convex_primitive(&self, s: f64) -> Result<f64> {
        match &self.kind {
            Kind::Exact => log_convex(s),
            Kind::Regularized { penalty, table, .. } => Ok(table.eval(s)? + penalty.primitive(s)?),
        }
    }

    pub fn big_f(&self, s: f64) -> Result<f64> {
        Ok(self.convex_primitive(s)? - 0.5 * self.params.lambda * s * s)
    }

    pub fn f(&self, s: f64) -> Result<f64> {
        Ok(self.monotone(s)? - self.params.lambda * s)
    }

    pub fn f_prime(&self, s: f64) -> Result<f64> {
        Ok(self.monotone_prime(s)? - self.params.lambda)
    }
}
