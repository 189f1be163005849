//! Manufactured-solution refinement on 16, 32 and 64 cells per side.

use chb_core::constitutive::Regularization;
use chb_core::nutrient::MobilityFaceRule;
use chb_core::sim::{run_mms, MmsConfig};
use chb_core::{GridSpec, ModelParams};

fn main() -> chb_core::Result<()> {
    let mp = ModelParams {
        chi: 0.5,
        ell: 1.0,
        lambda: 1.0,
        p: 1.5,
        epsilon: 0.1,
        regularization: Regularization::ExactLog,
        q0: 4.0,
        penalty_exponent: None,
        q_monitor: 2.0,
    };
    let mc = MmsConfig {
        grids: vec![16, 32, 64],
        ..MmsConfig::default()
    };
    let table = run_mms(GridSpec::unit_square(16)?, &mp, &mc, MobilityFaceRule::HarmonicMean)?;
    print!("{}", table.to_csv());
    println!("orders phi {:?}", table.order_phi);
    println!("orders sigma {:?}", table.order_sigma);
    println!("orders u {:?}", table.order_u);
    Ok(())
}
