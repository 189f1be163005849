//! Scalar constitutive laws: the logarithmic potential and its regularisation,
//! the degenerate sensitivity with its entropy variables, and the sources.

mod potential;
pub mod quadrature;
mod regularization;
mod sensitivity;
mod sources;

pub use potential::{beta, beta_prime, log_convex, potential_big_f, potential_f};
pub use regularization::{
    beta_n, beta_n_primitive, big_f_n, penalty_j, penalty_j_primitive, yosida_beta,
    yosida_beta_prime, yosida_primitive_closed_form, Penalty, Potential, PotentialParams,
    Regularization, PRIMITIVE_QUAD_TOL, RESOLVENT_TOL,
};
pub use sensitivity::{
    alpha, alpha_prime, alpha_reciprocal, gamma, gamma_hat, SensitivityParams,
};
pub use sources::{
    builtin_sources, sobol_2d, validate_sources, SourceConstants, SourceFn, SourceReport,
    SourceSpec, BUILTIN_SOURCES,
};

use crate::error::Result;

/// Header of the constitutive table.
pub const TABLE_HEADER: &str = "s,alpha,gamma,gamma_hat,beta_n,F_n";

/// Tabulates `(s, alpha, gamma, gamma_hat, beta_n, F_n)` on `count` uniform
/// points of `[s_min, s_max]`. Entries outside a function's domain are `NaN`.
pub fn tabulate(
    s_min: f64,
    s_max: f64,
    count: usize,
    sens: &SensitivityParams,
    pot: &PotentialParams,
) -> Result<Vec<[f64; 6]>> {
    let potential = Potential::new(*pot)?;
    let step = if count > 1 {
        (s_max - s_min) / (count - 1) as f64
    } else {
        0.0
    };
    let mut rows = Vec::with_capacity(count);
    for k in 0..count {
        let s = s_min + step * k as f64;
        rows.push([
            s,
            sens.alpha(s).unwrap_or(f64::NAN),
            sens.gamma(s).unwrap_or(f64::NAN),
            sens.gamma_hat(s).unwrap_or(f64::NAN),
            potential.monotone(s).unwrap_or(f64::NAN),
            potential.big_f(s).unwrap_or(f64::NAN),
        ]);
    }
    Ok(rows)
}

/// Writes [`tabulate`] output as CSV.
pub fn write_table(rows: &[[f64; 6]], out: &mut impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "{TABLE_HEADER}")?;
    for r in rows {
        writeln!(out, "{:e},{:e},{:e},{:e},{:e},{:e}", r[0], r[1], r[2], r[3], r[4], r[5])?;
    }
    Ok(())
}
