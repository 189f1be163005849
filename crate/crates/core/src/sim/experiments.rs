//! Parameter sweeps over identical configurations.
//!
//! Weak solutions need not be unique, so every comparison here is between
//! the deterministic trajectories of the scheme.

use rayon::prelude::*;
use serde::Serialize;

use crate::constitutive::{Potential, Regularization};
use crate::diagnostics::{theorem_exponents, NormReport};
use crate::error::{ChbError, Result};
use crate::flow::{korteweg_force, velocity_gap, FlowSolveParams, FlowSolver};
use crate::grid::ScalarField;

use super::config::SimConfig;
use super::run::{RunStatus, Simulation};

/// Thread pool capped by `CHB_THREADS` when set.
pub fn sweep_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("CHB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| ChbError::Config(format!("CHB_THREADS must be a positive integer, got {v:?}")))?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| ChbError::Config(e.to_string()))
}

fn l2_gap(a: &ScalarField, b: &ScalarField) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    d.norm_sq().sqrt()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FrozenRow {
    pub epsilon: f64,
    /// `|u_eps - u_0|` in the face `L^2` norm.
    pub u_gap: f64,
}

/// Brinkman against Darcy velocities for one fixed force.
pub fn frozen_force_sweep(cfg: &SimConfig, eps_list: &[f64]) -> Result<Vec<FrozenRow>> {
    let phi = cfg.initial_phi()?;
    let sigma = cfg.initial_sigma()?;
    let ch = crate::cahn_hilliard::ChSolver::new(cfg.grid, &cfg.model, cfg.ch_params())?;
    let mu = ch.chemical_potential(&phi, &phi, &sigma)?;
    let force = korteweg_force(&phi, &mu, &sigma, cfg.model.chi)?;
    let base = cfg.flow_params();
    let u0 = FlowSolver::new(cfg.grid, FlowSolveParams { epsilon: 0.0, ..base })?.solve(&force)?.u;
    eps_list
        .iter()
        .map(|&eps| {
            let u = FlowSolver::new(cfg.grid, FlowSolveParams { epsilon: eps, ..base })?.solve(&force)?.u;
            Ok(FrozenRow {
                epsilon: eps,
                u_gap: velocity_gap(&u, &u0),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DarcyRow {
    pub epsilon: f64,
    /// `|u_eps - u_0|` in `L^2(0, T; L^2)`.
    pub u_gap: f64,
    pub sigma_gap: f64,
    pub phi_gap: f64,
}

/// Required ratio between the first and last frozen-force gaps.
pub const MIN_FROZEN_REDUCTION: f64 = 10.0;

#[derive(Clone, Debug, Serialize)]
pub struct DarcySweepTable {
    pub frozen: Vec<FrozenRow>,
    pub coupled: Vec<DarcyRow>,
    pub frozen_monotone: bool,
    /// First over last frozen gap.
    pub frozen_reduction: f64,
    pub coupled_monotone: bool,
    pub complete: bool,
    pub message: String,
}

impl DarcySweepTable {
    pub fn pass(&self) -> bool {
        self.complete
            && self.frozen_monotone
            && self.frozen_reduction >= MIN_FROZEN_REDUCTION
            && self.coupled_monotone
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,frozen_u_gap,u_gap,sigma_gap,phi_gap\n");
        for (f, c) in self.frozen.iter().zip(&self.coupled) {
            s += &format!("{:e},{:e},{:e},{:e},{:e}\n", c.epsilon, f.u_gap, c.u_gap, c.sigma_gap, c.phi_gap);
        }
        s
    }
}

/// Runs the configuration at each `eps` and at `eps = 0` in lockstep.
pub fn darcy_sweep(cfg: &SimConfig, eps_list: &[f64]) -> Result<DarcySweepTable> {
    let positive: Vec<f64> = eps_list.iter().copied().filter(|&e| e != 0.0).collect();
    if positive.iter().any(|&e| !(e > 0.0)) || !strictly_decreasing(&positive) {
        return Err(ChbError::Config("eps_list must be positive and strictly decreasing".into()));
    }
    let mut base = cfg.clone();
    base.flow.enabled = true;
    let members: Vec<SimConfig> = std::iter::once(0.0)
        .chain(positive.iter().copied())
        .map(|eps| {
            let mut c = base.clone();
            c.model.epsilon = eps;
            c
        })
        .collect();
    let pool = sweep_pool()?;
    let mut sims: Vec<Simulation> = pool.install(|| members.par_iter().map(Simulation::new).collect::<Result<_>>())?;
    let frozen = frozen_force_sweep(&base, &positive)?;
    let mut u_gap2 = vec![0.0; positive.len()];
    let mut message = String::new();
    let mut complete = true;
    while !sims[0].is_finished() {
        let outcome: Vec<Result<f64>> = pool.install(|| {
            sims.par_iter_mut()
                .map(|s| s.advance().map(|r| r.dt))
                .collect()
        });
        if let Some((k, Err(e))) = outcome.iter().enumerate().find(|(_, r)| r.is_err()) {
            complete = false;
            message = format!("member eps = {} failed: {e}", sims[k].config().model.epsilon);
            break;
        }
        let t0 = sims[0].t;
        if sims.iter().any(|s| s.t != t0) {
            complete = false;
            message = "members took different time steps".into();
            break;
        }
        let dt = sims[0].last_record().dt;
        for (k, s) in sims[1..].iter().enumerate() {
            u_gap2[k] += dt * velocity_gap(&s.u, &sims[0].u).powi(2);
        }
    }
    let coupled: Vec<DarcyRow> = sims[1..]
        .iter()
        .zip(&u_gap2)
        .map(|(s, g2)| DarcyRow {
            epsilon: s.config().model.epsilon,
            u_gap: g2.sqrt(),
            sigma_gap: l2_gap(&s.sigma, &sims[0].sigma),
            phi_gap: l2_gap(&s.phi, &sims[0].phi),
        })
        .collect();
    let frozen_monotone = strictly_decreasing(&frozen.iter().map(|r| r.u_gap).collect::<Vec<_>>());
    let coupled_monotone = strictly_decreasing(&coupled.iter().map(|r| r.u_gap).collect::<Vec<_>>());
    let frozen_reduction = match (frozen.first(), frozen.last()) {
        (Some(a), Some(b)) if b.u_gap > 0.0 => a.u_gap / b.u_gap,
        _ => f64::INFINITY,
    };
    Ok(DarcySweepTable {
        frozen,
        coupled,
        frozen_monotone,
        frozen_reduction,
        coupled_monotone,
        complete,
        message,
    })
}

/// One member of a sweep run to `t_end`.
fn run_member(cfg: &SimConfig) -> (Result<Simulation>, RunStatus) {
    match Simulation::new(cfg).and_then(|mut s| s.run_to_end(|_| Ok(())).map(|_| s)) {
        Ok(s) => (Ok(s), RunStatus::Completed),
        Err(e) => {
            let st = RunStatus::from_error(&e);
            (Err(e), st)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NRow {
    /// `None` for the logarithmic reference.
    pub n: Option<u32>,
    pub sup_abs_phi: f64,
    pub final_energy: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub status: RunStatus,
}

#[derive(Clone, Debug, Serialize)]
pub struct NSweepTable {
    pub rows: Vec<NRow>,
    /// `(max - min)/min` of `sup|phi|` over the regularised members.
    pub spread: f64,
    pub uniform_bound: bool,
    /// `|E_{n_k+1} - E_{n_k}|` for consecutive regularised members.
    pub energy_cauchy: Vec<f64>,
    pub energy_converging: bool,
    /// `Some(max|phi| < 1)` when the reference run is included.
    pub exact_inside: Option<bool>,
    pub complete: bool,
}

/// Largest spread of the uniform bound accepted by [`NSweepTable::pass`].
pub const MAX_SUP_SPREAD: f64 = 0.2;

impl NSweepTable {
    pub fn pass(&self) -> bool {
        self.complete && self.uniform_bound && self.energy_converging && self.exact_inside != Some(false)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,sup_abs_phi,final_energy,beta_min,beta_max,status\n");
        for r in &self.rows {
            let n = r.n.map_or("exact".to_string(), |n| n.to_string());
            s += &format!(
                "{n},{:e},{:e},{:e},{:e},{:?}\n",
                r.sup_abs_phi, r.final_energy, r.beta_min, r.beta_max, r.status
            );
        }
        s
    }
}

pub fn n_sweep(cfg: &SimConfig, n_list: &[u32], include_exact: bool) -> Result<NSweepTable> {
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(ChbError::Config("n_list must hold positive indices".into()));
    }
    let mut members: Vec<SimConfig> = n_list
        .iter()
        .map(|&n| {
            let mut c = cfg.clone();
            c.model.regularization = Regularization::BetaN { n };
            c
        })
        .collect();
    if include_exact {
        let mut c = cfg.clone();
        c.model.regularization = Regularization::ExactLog;
        members.push(c);
    }
    let pool = sweep_pool()?;
    let results: Vec<(Result<Simulation>, RunStatus)> = pool.install(|| members.par_iter().map(run_member).collect());
    let mut rows = Vec::new();
    for (c, (res, status)) in members.iter().zip(results) {
        let n = c.model.regularization.index();
        let row = match res {
            Ok(s) => {
                let pot = Potential::new(c.model.potential())?;
                let b = s.phi.try_map(|v| pot.monotone(v))?;
                NRow {
                    n,
                    sup_abs_phi: s.records().iter().map(|r| r.max_abs_phi).fold(0.0, f64::max),
                    final_energy: s.last_record().energy,
                    beta_min: b.min(),
                    beta_max: b.max(),
                    status,
                }
            }
            Err(_) => NRow {
                n,
                sup_abs_phi: f64::NAN,
                final_energy: f64::NAN,
                beta_min: f64::NAN,
                beta_max: f64::NAN,
                status,
            },
        };
        rows.push(row);
    }
    let complete = rows.iter().all(|r| r.status == RunStatus::Completed);
    let reg: Vec<&NRow> = rows.iter().filter(|r| r.n.is_some()).collect();
    let sups: Vec<f64> = reg.iter().map(|r| r.sup_abs_phi).collect();
    let lo = sups.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sups.iter().copied().fold(0.0, f64::max);
    let spread = (hi - lo) / lo;
    let energy_cauchy: Vec<f64> = reg
        .windows(2)
        .map(|w| (w[1].final_energy - w[0].final_energy).abs())
        .collect();
    Ok(NSweepTable {
        spread,
        uniform_bound: spread < MAX_SUP_SPREAD && sups.iter().all(|s| s.is_finite()),
        energy_converging: strictly_decreasing(&energy_cauchy),
        energy_cauchy,
        exact_inside: rows.iter().find(|r| r.n.is_none()).map(|r| r.sup_abs_phi < 1.0),
        complete,
        rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PRow {
    pub p: f64,
    pub p0: f64,
    pub s_exp: f64,
    pub r_exp: f64,
    pub final_energy: f64,
    pub min_sigma: f64,
    pub norms: Option<NormReport>,
    pub status: RunStatus,
}

#[derive(Clone, Debug, Serialize)]
pub struct PSweepTable {
    pub rows: Vec<PRow>,
    pub complete: bool,
    pub min_sigma_nonnegative: bool,
}

impl PSweepTable {
    pub fn pass(&self) -> bool {
        self.complete && self.min_sigma_nonnegative
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "p,P0,S,R,final_energy,min_sigma,phi_linf_v,sigma_linf_lq,u_l2,lnsigma_l2_v,status\n",
        );
        for r in &self.rows {
            let n = r.norms.clone().unwrap_or_default();
            s += &format!(
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:?}\n",
                r.p, r.p0, r.s_exp, r.r_exp, r.final_energy, r.min_sigma, n.phi_linf_v, n.sigma_linf_lq,
                n.u_l2, n.lnsigma_l2_v, r.status
            );
        }
        s
    }
}

pub fn p_sweep(cfg: &SimConfig, p_list: &[f64]) -> Result<PSweepTable> {
    let members: Vec<SimConfig> = p_list
        .iter()
        .map(|&p| {
            let mut c = cfg.clone();
            c.model.p = p;
            c
        })
        .collect();
    for c in &members {
        c.model.validate()?;
    }
    let pool = sweep_pool()?;
    let results: Vec<(Result<Simulation>, RunStatus)> = pool.install(|| members.par_iter().map(run_member).collect());
    let rows: Vec<PRow> = members
        .iter()
        .zip(results)
        .map(|(c, (res, status))| {
            let (p0, s_exp, r_exp) = theorem_exponents(c.model.p, c.model.q_monitor);
            let (final_energy, min_sigma, norms) = match res {
                Ok(s) => (
                    s.last_record().energy,
                    s.records().iter().map(|r| r.min_sigma).fold(f64::INFINITY, f64::min),
                    Some(s.norm_report()),
                ),
                Err(_) => (f64::NAN, f64::NAN, None),
            };
            PRow {
                p: c.model.p,
                p0,
                s_exp,
                r_exp,
                final_energy,
                min_sigma,
                norms,
                status,
            }
        })
        .collect();
    Ok(PSweepTable {
        complete: rows.iter().all(|r| r.status == RunStatus::Completed),
        min_sigma_nonnegative: rows.iter().all(|r| r.min_sigma >= 0.0),
        rows,
    })
}
