//! Full run with artifacts, the same as `chb run --config configs/coupled.toml`.

use chb_core::sim::{run, SimConfig};

fn main() -> chb_core::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/coupled.toml".into());
    let mut cfg = SimConfig::load(path.as_ref())?;
    cfg.output.dir = std::env::temp_dir().join("chb-coupled-example");
    let s = run(&cfg)?;
    println!("{:?} after {} steps, t = {}", s.status, s.steps, s.t_final);
    println!("artifacts in {}", cfg.output.dir.display());
    if let Some(r) = &s.final_record {
        println!("energy {:.6}  min sigma {:.3e}  max|phi| {:.6}", r.energy, r.min_sigma, r.max_abs_phi);
    }
    Ok(())
}
