//! Runs the coupled loop from a config and prints the energy balance per step.
//!
//! `cargo run --release --example energy_audit -- configs/coupled.toml`

use chb_core::sim::{SimConfig, Simulation};

fn main() -> chb_core::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/coupled.toml".into());
    let mut cfg = SimConfig::load(path.as_ref())?;
    cfg.time.t_end = cfg.time.t_end.min(50.0 * cfg.time.dt);
    let mut sim = Simulation::new(&cfg)?;
    println!("{:>5} {:>12} {:>12} {:>12} {:>10}", "step", "energy", "dissipation", "residual", "min sigma");
    while !sim.is_finished() {
        let r = sim.advance()?;
        println!(
            "{:5} {:12.6} {:12.4e} {:12.3e} {:10.3e}",
            r.step,
            r.energy,
            r.dissipation(),
            r.energy_residual,
            r.min_sigma
        );
    }
    Ok(())
}
