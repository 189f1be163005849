use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum ChbError {
    #[error("argument {value} outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("time step {dt:.3e} violates the {guard} guard (limit {limit:.3e})")]
    StepGuard {
        guard: &'static str,
        dt: f64,
        limit: f64,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("malformed field snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ChbError {
    /// Whether retrying the step with a smaller time step can help.
    pub fn is_recoverable(&self) -> bool {
        matches!(
            self,
            ChbError::NoConvergence { .. } | ChbError::StepGuard { .. } | ChbError::Numeric(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, ChbError>;
