//! Physical constants of the coupled model.

use serde::{Deserialize, Serialize};

use crate::constitutive::{PotentialParams, Regularization, SensitivityParams};
use crate::error::{ChbError, Result};

/// Every constant of the coupled system. No field has a hidden default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Chemotactic coefficient.
    pub chi: f64,
    /// Linear mass sink rate.
    pub ell: f64,
    /// Concavity of the double well.
    pub lambda: f64,
    /// Sensitivity exponent in `(1, 2]`.
    pub p: f64,
    /// Brinkman viscosity; zero selects Darcy flow.
    pub epsilon: f64,
    pub regularization: Regularization,
    pub q0: f64,
    #[serde(default)]
    pub penalty_exponent: Option<f64>,
    /// Exponent `q` of the monitored `sigma^q` entropy quantities.
    pub q_monitor: f64,
}

impl ModelParams {
    pub fn potential(&self) -> PotentialParams {
        PotentialParams {
            lambda: self.lambda,
            regularization: self.regularization,
            q0: self.q0,
            penalty_exponent: self.penalty_exponent,
        }
    }

    pub fn sensitivity(&self) -> SensitivityParams {
        SensitivityParams {
            p: self.p,
            chi: self.chi,
        }
    }

    /// `1/n` in regularised mode, zero otherwise.
    pub fn inverse_index(&self) -> f64 {
        self.regularization.index().map_or(0.0, |n| 1.0 / n as f64)
    }

    pub fn validate(&self) -> Result<()> {
        self.potential().validate()?;
        self.sensitivity().validate()?;
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return Err(ChbError::Config(format!("ell must be positive, got {}", self.ell)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(ChbError::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.q_monitor >= 1.0 && self.q_monitor.is_finite()) {
            return Err(ChbError::Config(format!("q_monitor must be >= 1, got {}", self.q_monitor)));
        }
        Ok(())
    }
}
