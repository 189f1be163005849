//! Brinkman velocities for one Korteweg force approach the Darcy velocity
//! as the viscosity goes to zero.

use chb_core::flow::{korteweg_force, symmetric_gradient_norm_sq, velocity_gap, FlowSolveParams, FlowSolver};
use chb_core::grid::face_inner_product;
use chb_core::{GridSpec, ScalarField};

fn main() -> chb_core::Result<()> {
    let g = GridSpec::unit_square(64)?;
    let phi = ScalarField::from_fn(g, |x, y| {
        let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
        0.9 * ((0.2 - r) / 0.1).tanh()
    });
    let mu = ScalarField::from_fn(g, |x, y| (3.0 * x).cos() + y * y);
    let sigma = ScalarField::from_fn(g, |x, _| 1.0 + 0.5 * x);
    let force = korteweg_force(&phi, &mu, &sigma, 1.0)?;
    let darcy = FlowSolver::new(g, FlowSolveParams::new(0.0))?.solve(&force)?;
    println!("{:>8} {:>12} {:>12} {:>12}", "eps", "|u - u0|", "div max", "energy gap");
    for eps in [1.0, 1e-1, 1e-2, 1e-3, 1e-4] {
        let s = FlowSolver::new(g, FlowSolveParams::new(eps))?.solve(&force)?;
        let lhs = s.u.norm_sq() + eps * symmetric_gradient_norm_sq(&s.u);
        let rhs = face_inner_product(&force, &s.u);
        println!(
            "{eps:8.0e} {:12.4e} {:12.2e} {:12.2e}",
            velocity_gap(&s.u, &darcy.u),
            s.div_max,
            (lhs - rhs).abs() / rhs.abs()
        );
    }
    Ok(())
}
