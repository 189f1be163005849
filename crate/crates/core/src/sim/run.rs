//! The coupled step loop and the `run` artifact writer.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::cahn_hilliard::ChSolver;
use crate::constitutive::{validate_sources, SourceSpec};
use crate::diagnostics::{
    energy_inequality_residual, theorem_norm_report, DiagnosticsContext, DiagnosticsRecord,
    NormReport, StepView, CSV_HEADER,
};
use crate::error::{ChbError, Result};
use crate::flow::{korteweg_force, FlowSolver};
use crate::grid::{FaceField, GridSpec, ScalarField};
use crate::nutrient::NutrientSolver;
use crate::snapshot::{self, Encoding};

use super::config::SimConfig;

/// Clean steps after which a reduced time step is doubled again.
pub const REGROW_AFTER: usize = 5;

/// Allowed drift between the simulated mean and the scalar mass ODE.
pub const MASS_ALIGNMENT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Assumption checks performed before a run starts.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl ValidationReport {
    fn push(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail,
        });
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn message(&self) -> String {
        self.failures()
            .iter()
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Runs every assumption check; configuration errors become failed checks.
pub fn validate_config(cfg: &SimConfig) -> ValidationReport {
    let mut rep = ValidationReport::default();
    if let Err(e) = cfg.validate_static() {
        rep.push("config", false, e.to_string());
        return rep;
    }
    rep.push("config", true, "grid, model and numerics are well formed".into());
    let ell = cfg.model.ell;
    match cfg.sources.build(ell) {
        Ok(src) => {
            let ratio = src.h_ratio(ell);
            rep.push(
                "source_bound",
                ratio < 1.0,
                format!("H/ell = {ratio} (must be < 1)"),
            );
            let sampled = validate_sources(&src, ell, 4096, 10.0);
            rep.push(
                "source_class",
                sampled.pass,
                if sampled.pass {
                    format!("{} samples within the admissible class", sampled.samples)
                } else {
                    sampled.failures.join("; ")
                },
            );
        }
        Err(e) => rep.push("source_bound", false, e.to_string()),
    }
    match cfg.initial_phi() {
        Ok(phi) => {
            let m = phi.mean();
            rep.push("phi0_mean", m.abs() < 1.0, format!("mean(phi0) = {m}"));
            if cfg.model.regularization.index().is_none() {
                let a = phi.max_abs();
                rep.push("phi0_range", a < 1.0, format!("max|phi0| = {a} (logarithmic potential needs < 1)"));
            }
            rep.push("phi0_finite", phi.is_finite(), "phi0 is finite".into());
        }
        Err(e) => rep.push("phi0", false, e.to_string()),
    }
    match cfg.initial_sigma() {
        Ok(s) => {
            let lo = s.min();
            rep.push("sigma0_nonnegative", lo >= 0.0, format!("min(sigma0) = {lo}"));
            let l1: f64 = s.values().iter().map(|v| v.ln().abs()).sum::<f64>() * s.grid().cell_volume();
            rep.push(
                "sigma0_log_integrable",
                l1.is_finite(),
                format!("integral |ln sigma0| = {l1}"),
            );
            rep.push("sigma0_finite", s.is_finite(), "sigma0 is finite".into());
        }
        Err(e) => rep.push("sigma0", false, e.to_string()),
    }
    rep.pass = rep.checks.iter().all(|c| c.pass);
    rep
}

/// The coupled state and its step operators.
pub struct Simulation {
    cfg: SimConfig,
    grid: GridSpec,
    src: SourceSpec,
    ch: ChSolver,
    nutrient: NutrientSolver,
    flow: Option<FlowSolver>,
    diag: DiagnosticsContext,
    pub phi: ScalarField,
    pub mu: ScalarField,
    pub sigma: ScalarField,
    /// Velocity that advected the last step.
    pub u: FaceField,
    pub pressure: ScalarField,
    pub t: f64,
    pub step: usize,
    /// Steps that needed a smaller time step.
    pub halvings: usize,
    /// Time step of the next attempt; drops on failure, doubles back after
    /// [`REGROW_AFTER`] clean steps.
    dt_try: f64,
    clean_steps: usize,
    mass_ref: f64,
    records: Vec<DiagnosticsRecord>,
}

impl Simulation {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate_static()?;
        Self::from_state(cfg, cfg.initial_phi()?, cfg.initial_sigma()?)
    }

    /// Starts from explicit initial fields; skips the initial-data checks.
    pub fn from_state(cfg: &SimConfig, phi: ScalarField, sigma: ScalarField) -> Result<Self> {
        cfg.validate_static()?;
        let grid = cfg.grid;
        if *phi.grid() != grid || *sigma.grid() != grid {
            return Err(ChbError::GridMismatch);
        }
        let mp = cfg.model;
        let src = cfg.sources.build(mp.ell)?;
        let ch = ChSolver::new(grid, &mp, cfg.ch_params())?;
        let nutrient = NutrientSolver::new(grid, &mp, cfg.nutrient_params())?;
        let flow = if cfg.flow.enabled {
            Some(FlowSolver::new(grid, cfg.flow_params())?)
        } else {
            None
        };
        let diag = DiagnosticsContext::new(&mp, cfg.numerics.mobility_face_rule)?;
        let mu = ch.chemical_potential(&phi, &phi, &sigma)?;
        let mut sim = Self {
            cfg: cfg.clone(),
            grid,
            src,
            ch,
            nutrient,
            flow,
            diag,
            mass_ref: phi.mean(),
            phi,
            mu,
            sigma,
            u: FaceField::zeros(grid),
            pressure: ScalarField::zeros(grid),
            t: 0.0,
            step: 0,
            halvings: 0,
            dt_try: cfg.time.dt,
            clean_steps: 0,
            records: Vec::new(),
        };
        let (u, pi, _) = sim.velocity()?;
        let view = StepView {
            phi: &sim.phi,
            mu: &sim.mu,
            sigma: &sim.sigma,
            u: &u,
            prev: None,
        };
        let rec = sim.diag.record(0, 0.0, 0.0, &view, &sim.src, sim.mass_ref)?;
        sim.u = u;
        sim.pressure = pi;
        sim.records.push(rec);
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn sources(&self) -> &SourceSpec {
        &self.src
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn last_record(&self) -> &DiagnosticsRecord {
        self.records.last().expect("the initial record always exists")
    }

    pub fn is_finished(&self) -> bool {
        self.cfg.time.t_end - self.t <= 1e-12 * self.cfg.time.dt
    }

    fn velocity(&self) -> Result<(FaceField, ScalarField, f64)> {
        match &self.flow {
            None => Ok((FaceField::zeros(self.grid), ScalarField::zeros(self.grid), 0.0)),
            Some(solver) => {
                let f = korteweg_force(&self.phi, &self.mu, &self.sigma, self.cfg.model.chi)?;
                let sol = solver.solve(&f)?;
                Ok((sol.u, sol.pi, sol.div_max))
            }
        }
    }

    /// Advances one step, halving `dt` on recoverable failures (at most
    /// `time.max_halvings` times per step).
    pub fn advance(&mut self) -> Result<&DiagnosticsRecord> {
        let (u, pi, div_max) = self.velocity()?;
        let tol = 10.0 * self.cfg.flow.krylov_tol;
        if div_max > tol {
            return Err(ChbError::Invariant(format!("|div u| = {div_max:e} exceeds {tol:e}")));
        }
        let remaining = self.cfg.time.t_end - self.t;
        let mut dt = self.dt_try.min(remaining);
        let mut attempt = 0;
        loop {
            match self.try_step(dt, &u) {
                Ok((phi, mu, sigma, newton)) => {
                    if attempt > 0 {
                        self.halvings += 1;
                        self.clean_steps = 0;
                        self.dt_try = dt;
                    } else if self.dt_try < self.cfg.time.dt {
                        self.clean_steps += 1;
                        if self.clean_steps >= REGROW_AFTER {
                            self.clean_steps = 0;
                            self.dt_try = (2.0 * self.dt_try).min(self.cfg.time.dt);
                        }
                    }
                    return self.commit(dt, phi, mu, sigma, u, pi, newton);
                }
                Err(e) if e.is_recoverable() && attempt < self.cfg.time.max_halvings => {
                    attempt += 1;
                    dt *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn try_step(&mut self, dt: f64, u: &FaceField) -> Result<(ScalarField, ScalarField, ScalarField, usize)> {
        self.ch.set_dt(dt);
        self.nutrient.set_dt(dt);
        let (phi, mu, rep) = self.ch.step(&self.phi, &self.sigma, u, &self.src, None)?;
        let sigma = self.nutrient.step(&self.sigma, &self.phi, u, &self.src, None)?;
        Ok((phi, mu, sigma, rep.newton_iterations))
    }

    #[allow(clippy::too_many_arguments)]
    fn commit(
        &mut self,
        dt: f64,
        phi: ScalarField,
        mu: ScalarField,
        sigma: ScalarField,
        u: FaceField,
        pi: ScalarField,
        newton: usize,
    ) -> Result<&DiagnosticsRecord> {
        let ell = self.cfg.model.ell;
        let hbar = self
            .phi
            .values()
            .iter()
            .zip(self.sigma.values())
            .map(|(&p, &s)| self.src.h(s, p))
            .sum::<f64>()
            / self.phi.values().len() as f64;
        let mass_ref = (self.mass_ref / dt + hbar) / (1.0 / dt + ell);
        let view = StepView {
            phi: &phi,
            mu: &mu,
            sigma: &sigma,
            u: &u,
            prev: Some((&self.phi, &self.sigma)),
        };
        let mut rec = self
            .diag
            .record(self.step + 1, self.t + dt, dt, &view, &self.src, mass_ref)?;
        rec.newton_iterations = newton;
        rec.energy_residual = energy_inequality_residual(self.last_record(), &rec, dt, rec.source_power);
        let drift = (rec.mass_phi - mass_ref).abs();
        if drift > MASS_ALIGNMENT_TOL {
            return Err(ChbError::Invariant(format!(
                "mean(phi) drifted {drift:e} from the mass balance"
            )));
        }
        if self.ch.potential().is_exact() && !(rec.max_abs_phi < 1.0) {
            return Err(ChbError::Invariant(format!("max|phi| = {} left (-1, 1)", rec.max_abs_phi)));
        }
        self.phi = phi;
        self.mu = mu;
        self.sigma = sigma;
        self.u = u;
        self.pressure = pi;
        self.t += dt;
        self.step += 1;
        self.mass_ref = mass_ref;
        self.records.push(rec);
        Ok(self.last_record())
    }

    /// Steps until `t_end`, calling `observe` after each accepted step.
    pub fn run_to_end(&mut self, mut observe: impl FnMut(&Simulation) -> Result<()>) -> Result<()> {
        while !self.is_finished() {
            self.advance()?;
            observe(self)?;
        }
        Ok(())
    }

    pub fn norm_report(&self) -> NormReport {
        theorem_norm_report(&self.records, &self.cfg.model)
    }
}

/// Exit status of a run, mirrored in the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    ValidationFailed,
    InvariantViolated,
    NumericFailure,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Completed => 0,
            RunStatus::ValidationFailed => 2,
            RunStatus::InvariantViolated => 3,
            RunStatus::NumericFailure => 4,
        }
    }

    pub fn from_error(e: &ChbError) -> Self {
        match e {
            ChbError::Invariant(_) => RunStatus::InvariantViolated,
            ChbError::Config(_) => RunStatus::ValidationFailed,
            _ => RunStatus::NumericFailure,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdicts {
    pub min_sigma_nonnegative: bool,
    /// `None` when the potential is regularised.
    pub phi_inside_unit_interval: Option<bool>,
    pub max_mass_drift: f64,
    pub energy_nonincreasing: bool,
    pub max_energy_residual: f64,
    pub max_div_u: f64,
}

impl Verdicts {
    pub fn from_records(records: &[DiagnosticsRecord], exact: bool) -> Self {
        let mut v = Verdicts {
            min_sigma_nonnegative: true,
            phi_inside_unit_interval: exact.then_some(true),
            max_mass_drift: 0.0,
            energy_nonincreasing: true,
            max_energy_residual: 0.0,
            max_div_u: 0.0,
        };
        for (k, r) in records.iter().enumerate() {
            v.min_sigma_nonnegative &= r.min_sigma >= 0.0;
            if let Some(inside) = v.phi_inside_unit_interval.as_mut() {
                *inside &= r.max_abs_phi < 1.0;
            }
            v.max_mass_drift = v.max_mass_drift.max((r.mass_phi - r.mass_ode_ref).abs());
            if k > 0 {
                v.energy_nonincreasing &= r.energy <= records[k - 1].energy;
                v.max_energy_residual = v.max_energy_residual.max(r.energy_residual);
            }
            v.max_div_u = v.max_div_u.max(r.div_u_max);
        }
        v
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub status: RunStatus,
    pub exit_code: i32,
    pub message: String,
    pub steps: usize,
    pub t_final: f64,
    pub halvings: usize,
    pub validation: ValidationReport,
    pub verdicts: Option<Verdicts>,
    pub norms: Option<NormReport>,
    pub final_record: Option<DiagnosticsRecord>,
}

/// `chb-core <version> (<commit>)`.
pub fn version_stamp() -> String {
    format!(
        "chb-core {} ({})",
        env!("CARGO_PKG_VERSION"),
        option_env!("CHB_GIT_REV").unwrap_or("unknown")
    )
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::from)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Writes config echo, version stamp and validator report into `dir`.
pub fn write_provenance(dir: &Path, cfg: &SimConfig, report: &ValidationReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml_string()?)?;
    fs::write(dir.join("version.txt"), version_stamp() + "\n")?;
    write_json(&dir.join("validation.json"), report)
}

fn write_snapshots(dir: &Path, sim: &Simulation, binary: bool) -> Result<()> {
    let enc = if binary { Encoding::Binary } else { Encoding::Ascii };
    let fields = dir.join("fields");
    fs::create_dir_all(&fields)?;
    for (name, f) in [("phi", &sim.phi), ("mu", &sim.mu), ("sigma", &sim.sigma)] {
        let path = fields.join(format!("{name}_{:06}.chb", sim.step));
        snapshot::write(&path, f, name, sim.t, enc)?;
    }
    Ok(())
}

/// Runs `cfg` and writes every artifact into `cfg.output.dir`.
pub fn run(cfg: &SimConfig) -> Result<RunSummary> {
    let dir = cfg.output.dir.clone();
    let report = validate_config(cfg);
    write_provenance(&dir, cfg, &report)?;
    let mut summary = RunSummary {
        status: RunStatus::Completed,
        exit_code: 0,
        message: String::new(),
        steps: 0,
        t_final: 0.0,
        halvings: 0,
        validation: report.clone(),
        verdicts: None,
        norms: None,
        final_record: None,
    };
    if !report.pass {
        summary.status = RunStatus::ValidationFailed;
        summary.exit_code = 2;
        summary.message = report.message();
        write_json(&dir.join("summary.json"), &summary)?;
        return Ok(summary);
    }
    let out = &cfg.output;
    let mut csv = std::io::BufWriter::new(fs::File::create(dir.join("diagnostics.csv"))?);
    writeln!(csv, "{CSV_HEADER}")?;
    let outcome = Simulation::new(cfg).and_then(|mut sim| {
        writeln!(csv, "{}", sim.last_record().csv_row())?;
        if out.snapshot_every > 0 {
            write_snapshots(&dir, &sim, out.binary_fields)?;
        }
        let res = sim.run_to_end(|s| {
            let last = s.is_finished();
            if last || (out.csv_every > 0 && s.step % out.csv_every == 0) {
                writeln!(csv, "{}", s.last_record().csv_row())?;
            }
            if out.snapshot_every > 0 && (last || s.step % out.snapshot_every == 0) {
                write_snapshots(&dir, s, out.binary_fields)?;
            }
            Ok(())
        });
        Ok((sim, res))
    });
    csv.flush()?;
    match outcome {
        Ok((sim, res)) => {
            if let Err(e) = &res {
                summary.status = RunStatus::from_error(e);
                summary.message = format!("step {} at t = {}: {e}", sim.step + 1, sim.t);
            }
            summary.steps = sim.step;
            summary.t_final = sim.t;
            summary.halvings = sim.halvings;
            summary.verdicts = Some(Verdicts::from_records(sim.records(), sim.ch.potential().is_exact()));
            summary.norms = Some(sim.norm_report());
            summary.final_record = Some(sim.last_record().clone());
        }
        Err(e) => {
            summary.status = RunStatus::from_error(&e);
            summary.message = e.to_string();
        }
    }
    summary.exit_code = summary.status.exit_code();
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}
