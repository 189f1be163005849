use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chb_core::sim::commands::{self, Overrides};
use chb_core::sim::SimConfig;

#[derive(Parser)]
#[command(name = "chb", version, about = "Cahn-Hilliard / nutrient / Brinkman simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed of the initial noise.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Write field snapshots every K steps.
    #[arg(long, value_name = "K")]
    snapshot_every: Option<usize>,
    /// Write snapshots in the binary encoding.
    #[arg(long)]
    binary_fields: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run(Common),
    /// Brinkman to Darcy sweep over epsilon.
    SweepDarcy(Common),
    /// Sweep over the regularisation index n.
    SweepN(Common),
    /// Sweep over the sensitivity exponent p.
    SweepP(Common),
    /// Manufactured-solution refinement study.
    Mms(Common),
    /// Tabulate alpha, gamma, gamma_hat, beta_n and F_n as CSV on stdout.
    TabulateConstitutive {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        s_min: f64,
        #[arg(long, default_value_t = 2.0)]
        s_max: f64,
        #[arg(long, default_value_t = 201)]
        count: usize,
    },
    /// Check the assumptions on the configuration and initial data.
    Validate(Common),
}

fn load(c: &Common) -> chb_core::Result<SimConfig> {
    let mut cfg = SimConfig::load(&c.config)?;
    Overrides {
        out: c.out.clone(),
        seed: c.seed,
        snapshot_every: c.snapshot_every,
        binary_fields: c.binary_fields,
    }
    .apply(&mut cfg);
    Ok(cfg)
}

fn dispatch(cmd: Command) -> chb_core::Result<i32> {
    match cmd {
        Command::Run(c) => commands::cmd_run(&load(&c)?),
        Command::SweepDarcy(c) => commands::cmd_sweep_darcy(&load(&c)?),
        Command::SweepN(c) => commands::cmd_sweep_n(&load(&c)?),
        Command::SweepP(c) => commands::cmd_sweep_p(&load(&c)?),
        Command::Mms(c) => commands::cmd_mms(&load(&c)?),
        Command::TabulateConstitutive {
            common,
            s_min,
            s_max,
            count,
        } => commands::cmd_tabulate(&load(&common)?, s_min, s_max, count, &mut std::io::stdout().lock()),
        Command::Validate(c) => commands::cmd_validate(&load(&c)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                chb_core::ChbError::Config(_) => 2,
                chb_core::ChbError::Invariant(_) => 3,
                _ => 4,
            }
        }
    };
    ExitCode::from(code as u8)
}
