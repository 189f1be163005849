//! Chemotactic drift towards a rough phase field from a nutrient bump that
//! vanishes on most of the domain. min sigma stays nonnegative.

use chb_core::constitutive::{Regularization, SourceSpec};
use chb_core::nutrient::{NutrientSolver, NutrientStepParams};
use chb_core::{FaceField, GridSpec, ModelParams, ScalarField};

fn main() -> chb_core::Result<()> {
    let g = GridSpec::unit_square(48)?;
    let mp = ModelParams {
        chi: 1.0,
        ell: 1.0,
        lambda: 2.0,
        p: 1.5,
        epsilon: 0.0,
        regularization: Regularization::ExactLog,
        q0: 4.0,
        penalty_exponent: None,
        q_monitor: 2.0,
    };
    let phi = ScalarField::from_fn(g, |x, y| 0.9 * ((13.0 * x).sin() * (11.0 * y).cos()).signum());
    let mut sigma = ScalarField::from_fn(g, |x, y| {
        let r2 = (x - 0.5).powi(2) + (y - 0.5).powi(2);
        (1.0 - r2 / 0.04).max(0.0)
    });
    let solver = NutrientSolver::new(g, &mp, NutrientStepParams::new(1e-4))?;
    let u = FaceField::zeros(g);
    let src = SourceSpec::zero();
    let m0 = sigma.integral();
    for step in 1..=500 {
        sigma = solver.step(&sigma, &phi, &u, &src, None)?;
        if step % 100 == 0 {
            println!(
                "step {step:4}  min = {:.3e}  max = {:.4}  mass drift = {:.2e}",
                sigma.min(),
                sigma.max(),
                sigma.integral() - m0
            );
        }
    }
    Ok(())
}
