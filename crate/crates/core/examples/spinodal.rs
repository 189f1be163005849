//! Spinodal decomposition with the exact logarithmic potential: no flow,
//! no nutrient coupling. Prints energy and max |phi| as the phases form.

use chb_core::cahn_hilliard::{ChSolver, ChStepParams};
use chb_core::constitutive::{Regularization, SourceSpec};
use chb_core::diagnostics::total_energy;
use chb_core::{FaceField, GridSpec, ModelParams, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> chb_core::Result<()> {
    let g = GridSpec::new(64, 64, 8.0, 8.0)?;
    let mp = ModelParams {
        chi: 0.0,
        ell: 0.01,
        lambda: 4.0,
        p: 1.5,
        epsilon: 0.0,
        regularization: Regularization::ExactLog,
        q0: 4.0,
        penalty_exponent: None,
        q_monitor: 2.0,
    };
    let solver = ChSolver::new(g, &mp, ChStepParams::new(0.02))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut phi = ScalarField::from_values(g, (0..g.num_cells()).map(|_| rng.gen_range(-0.05..0.05)).collect())?;
    let sigma = ScalarField::constant(g, 1.0);
    let u = FaceField::zeros(g);
    let src = SourceSpec::zero();
    for step in 1..=400 {
        let (next, _mu, rep) = solver.step(&phi, &sigma, &u, &src, None)?;
        phi = next;
        if step % 50 == 0 {
            println!(
                "step {step:4}  E = {:10.5}  max|phi| = {:.6}  newton = {}",
                total_energy(&phi, &sigma, &mp)?,
                phi.max_abs(),
                rep.newton_iterations
            );
        }
    }
    Ok(())
}
