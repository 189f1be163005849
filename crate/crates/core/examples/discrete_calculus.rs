//! Summation by parts on the staggered grid for a random field pair.

use chb_core::grid::{divergence, face_inner_product, gradient, inner_product, laplacian_neumann};
use chb_core::{FaceField, GridSpec, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> chb_core::Result<()> {
    let g = GridSpec::new(64, 48, 1.0, 0.75)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let v = ScalarField::from_values(g, (0..g.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let mut f = FaceField::zeros(g);
    f.x_mut().iter_mut().for_each(|a| *a = rng.gen_range(-1.0..1.0));
    f.y_mut().iter_mut().for_each(|a| *a = rng.gen_range(-1.0..1.0));
    f.zero_boundary_normal();

    let adj = inner_product(&divergence(&f), &v)? + face_inner_product(&f, &gradient(&v));
    let lap = laplacian_neumann(&v);
    println!("<div F, v> + <F, grad v>   = {adj:.3e}");
    println!("<lap v, v>                 = {:.6}", inner_product(&lap, &v)?);
    println!("sum lap v                  = {:.3e}", lap.integral());
    Ok(())
}
