//! Small n- and p-sweeps on a coarse grid.

use chb_core::sim::{n_sweep, p_sweep, SimConfig};

fn main() -> chb_core::Result<()> {
    let mut cfg = SimConfig::load("configs/n_sweep.toml".as_ref())?;
    cfg.grid = chb_core::GridSpec::new(24, 24, 3.0, 3.0)?;
    cfg.time.t_end = 2.0;
    let t = n_sweep(&cfg, &[4, 16], true)?;
    print!("{}", t.to_csv());
    println!("spread {:.4}\n", t.spread);

    let mut cfg = SimConfig::load("configs/p_sweep.toml".as_ref())?;
    cfg.grid = chb_core::GridSpec::unit_square(24)?;
    cfg.time.t_end = 10.0 * cfg.time.dt;
    print!("{}", p_sweep(&cfg, &[1.2, 2.0])?.to_csv());
    Ok(())
}
