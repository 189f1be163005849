//! Prints the sensitivity and potential laws for two regularisation indices.

use chb_core::constitutive::{tabulate, write_table, PotentialParams, SensitivityParams};

fn main() -> chb_core::Result<()> {
    let sens = SensitivityParams::new(1.5, 1.0)?;
    for n in [4, 32] {
        let pot = PotentialParams::regularized(2.0, n, 4.0);
        println!("# n = {n}");
        let rows = tabulate(0.0, 1.5, 16, &sens, &pot)?;
        write_table(&rows, &mut std::io::stdout().lock())?;
    }
    Ok(())
}
