//! The subcommands behind the `chb` binary. Each returns the process exit code.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::constitutive::{tabulate, write_table};
use crate::error::Result;

use super::config::{ExperimentConfig, MmsConfig, SimConfig};
use super::experiments::{darcy_sweep, n_sweep, p_sweep};
use super::mms::run_mms;
use super::run::{run, validate_config, write_provenance, RunStatus};

/// Default sweep lists used when the config has no matching experiment.
pub const DEFAULT_EPS_LIST: [f64; 5] = [1.0, 1e-1, 1e-2, 1e-3, 1e-4];
pub const DEFAULT_N_LIST: [u32; 3] = [4, 16, 64];
pub const DEFAULT_P_LIST: [f64; 3] = [1.2, 1.5, 2.0];

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub snapshot_every: Option<usize>,
    pub binary_fields: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut SimConfig) {
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.set_seed(s);
        }
        if let Some(k) = self.snapshot_every {
            cfg.output.snapshot_every = k;
        }
        if self.binary_fields {
            cfg.output.binary_fields = true;
        }
    }
}

fn write_outputs(dir: &Path, stem: &str, csv: &str, json: &impl Serialize) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{stem}.csv")), csv)?;
    let text = serde_json::to_string_pretty(json).map_err(std::io::Error::from)?;
    fs::write(dir.join(format!("{stem}.json")), text + "\n")?;
    Ok(())
}

/// Validates and writes provenance; `Some(2)` when a check fails.
fn preflight(cfg: &SimConfig) -> Result<Option<i32>> {
    let report = validate_config(cfg);
    write_provenance(&cfg.output.dir, cfg, &report)?;
    if report.pass {
        Ok(None)
    } else {
        eprintln!("validation failed: {}", report.message());
        Ok(Some(RunStatus::ValidationFailed.exit_code()))
    }
}

fn verdict_code(pass: bool, complete: bool) -> i32 {
    if !complete {
        RunStatus::NumericFailure.exit_code()
    } else if !pass {
        RunStatus::InvariantViolated.exit_code()
    } else {
        0
    }
}

pub fn cmd_run(cfg: &SimConfig) -> Result<i32> {
    let s = run(cfg)?;
    match s.status {
        RunStatus::Completed => println!(
            "completed {} steps to t = {} ({} halved); output in {}",
            s.steps,
            s.t_final,
            s.halvings,
            cfg.output.dir.display()
        ),
        _ => eprintln!("{:?}: {}", s.status, s.message),
    }
    Ok(s.exit_code)
}

pub fn cmd_validate(cfg: &SimConfig) -> Result<i32> {
    let report = validate_config(cfg);
    for c in &report.checks {
        println!("{} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    if report.pass {
        Ok(0)
    } else {
        Ok(RunStatus::ValidationFailed.exit_code())
    }
}

pub fn cmd_sweep_darcy(cfg: &SimConfig) -> Result<i32> {
    if let Some(code) = preflight(cfg)? {
        return Ok(code);
    }
    let eps = match &cfg.experiment {
        Some(ExperimentConfig::DarcySweep { eps_list }) => eps_list.clone(),
        _ => DEFAULT_EPS_LIST.to_vec(),
    };
    let t = darcy_sweep(cfg, &eps)?;
    write_outputs(&cfg.output.dir, "darcy_sweep", &t.to_csv(), &t)?;
    print!("{}", t.to_csv());
    if !t.message.is_empty() {
        eprintln!("{}", t.message);
    }
    Ok(verdict_code(t.pass(), t.complete))
}

pub fn cmd_sweep_n(cfg: &SimConfig) -> Result<i32> {
    if let Some(code) = preflight(cfg)? {
        return Ok(code);
    }
    let (n_list, exact) = match &cfg.experiment {
        Some(ExperimentConfig::NSweep { n_list, include_exact }) => (n_list.clone(), *include_exact),
        _ => (DEFAULT_N_LIST.to_vec(), true),
    };
    let t = n_sweep(cfg, &n_list, exact)?;
    write_outputs(&cfg.output.dir, "n_sweep", &t.to_csv(), &t)?;
    print!("{}", t.to_csv());
    println!("sup|phi| spread {:.4}", t.spread);
    Ok(verdict_code(t.pass(), t.complete))
}

pub fn cmd_sweep_p(cfg: &SimConfig) -> Result<i32> {
    if let Some(code) = preflight(cfg)? {
        return Ok(code);
    }
    let p_list = match &cfg.experiment {
        Some(ExperimentConfig::PSweep { p_list }) => p_list.clone(),
        _ => DEFAULT_P_LIST.to_vec(),
    };
    let t = p_sweep(cfg, &p_list)?;
    write_outputs(&cfg.output.dir, "p_sweep", &t.to_csv(), &t)?;
    print!("{}", t.to_csv());
    Ok(verdict_code(t.pass(), t.complete))
}

pub fn cmd_mms(cfg: &SimConfig) -> Result<i32> {
    let report = validate_config(cfg);
    write_provenance(&cfg.output.dir, cfg, &report)?;
    let mc = match &cfg.experiment {
        Some(ExperimentConfig::Mms(m)) => m.clone(),
        _ => MmsConfig::default(),
    };
    let t = run_mms(cfg.grid, &cfg.model, &mc, cfg.numerics.mobility_face_rule)?;
    write_outputs(&cfg.output.dir, "mms", &t.to_csv(), &t)?;
    print!("{}", t.to_csv());
    println!(
        "orders phi {:?} sigma {:?} u {:?}",
        t.order_phi, t.order_sigma, t.order_u
    );
    Ok(verdict_code(t.pass, true))
}

/// Writes the constitutive table of `cfg.model` to `out`.
pub fn cmd_tabulate(
    cfg: &SimConfig,
    s_min: f64,
    s_max: f64,
    count: usize,
    out: &mut impl std::io::Write,
) -> Result<i32> {
    cfg.model.validate()?;
    let rows = tabulate(s_min, s_max, count, &cfg.model.sensitivity(), &cfg.model.potential())?;
    write_table(&rows, out)?;
    Ok(0)
}
