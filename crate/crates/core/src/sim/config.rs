//! Run configuration (TOML).

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cahn_hilliard::ChStepParams;
use crate::constitutive::{builtin_sources, SourceConstants, SourceSpec};
use crate::error::{ChbError, Result};
use crate::flow::FlowSolveParams;
use crate::grid::{GridSpec, ScalarField};
use crate::model::ModelParams;
use crate::nutrient::{MobilityFaceRule, NutrientStepParams};
use crate::snapshot;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourcesConfig {
    /// Family for `h`.
    pub h: String,
    /// Family for `b`.
    pub b: String,
    #[serde(flatten)]
    pub constants: SourceConstants,
}

impl SourcesConfig {
    pub fn zero() -> Self {
        Self {
            h: "zero".into(),
            b: "zero".into(),
            constants: SourceConstants::default(),
        }
    }

    pub fn build(&self, ell: f64) -> Result<SourceSpec> {
        let h = builtin_sources(&self.h, self.constants, ell)?;
        let b = builtin_sources(&self.b, self.constants, ell)?;
        let mut spec = h.with_b_from(&b);
        spec.name = format!("{}+{}", self.h, self.b);
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiInit {
    /// `mean + U(-amplitude, amplitude)` per cell.
    ConstantMean {
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        seed: u64,
    },
    /// `outside + (inside - outside) (1 - tanh((r - radius)/width))/2`.
    TanhBlob {
        inside: f64,
        outside: f64,
        radius: f64,
        width: f64,
        #[serde(default)]
        center: Option<[f64; 2]>,
    },
    /// `mean + amplitude cos(kx pi x/lx) cos(ky pi y/ly)`.
    Cosine {
        mean: f64,
        amplitude: f64,
        kx: u32,
        ky: u32,
    },
    FromFile { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaInit {
    Constant { value: f64 },
    /// `base + amplitude max(0, 1 - r^2/radius^2)`.
    Bump {
        amplitude: f64,
        radius: f64,
        #[serde(default)]
        base: f64,
        #[serde(default)]
        center: Option<[f64; 2]>,
    },
    /// `mean + amplitude cos(kx pi x/lx) cos(ky pi y/ly)`.
    Cosine {
        mean: f64,
        amplitude: f64,
        kx: u32,
        ky: u32,
    },
    FromFile { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub phi: PhiInit,
    pub sigma: SigmaInit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_retries")]
    pub max_halvings: u32,
}

fn default_retries() -> u32 {
    5
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    /// Solve for the velocity each step; otherwise `u = 0`.
    pub enabled: bool,
    #[serde(default = "default_flow_tol")]
    pub krylov_tol: f64,
    #[serde(default = "default_flow_iter")]
    pub krylov_max_iter: usize,
    #[serde(default)]
    pub flip_pressure_sign: bool,
}

fn default_flow_tol() -> f64 {
    1e-10
}

fn default_flow_iter() -> usize {
    500
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            krylov_tol: default_flow_tol(),
            krylov_max_iter: default_flow_iter(),
            flip_pressure_sign: false,
        }
    }
}

/// Solver knobs; every field has a default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub ch_krylov_tol: f64,
    pub mobility_face_rule: MobilityFaceRule,
    pub sigma_floor: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let ch = ChStepParams::new(1.0);
        Self {
            newton_tol: ch.newton_tol,
            newton_max_iter: ch.newton_max_iter,
            ch_krylov_tol: ch.krylov_tol,
            mobility_face_rule: MobilityFaceRule::UpwindByDrivingForce,
            sigma_floor: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Field snapshots every `k` steps; 0 disables them.
    pub snapshot_every: usize,
    /// CSV row every `k` steps (the last step is always written).
    pub csv_every: usize,
    pub binary_fields: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("chb-out"),
            snapshot_every: 0,
            csv_every: 1,
            binary_fields: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmsConfig {
    pub grids: Vec<usize>,
    /// `dt = dt_factor h^2`.
    pub dt_factor: f64,
    pub t_end: f64,
    pub phi_amplitude: f64,
    pub sigma_amplitude: f64,
    /// Viscosity of the stationary flow check.
    #[serde(default = "default_mms_eps")]
    pub flow_epsilon: f64,
}

fn default_mms_eps() -> f64 {
    0.1
}

impl Default for MmsConfig {
    fn default() -> Self {
        Self {
            grids: vec![32, 64, 128],
            dt_factor: 0.5,
            t_end: 0.02,
            phi_amplitude: 0.5,
            sigma_amplitude: 0.5,
            flow_epsilon: default_mms_eps(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentConfig {
    DarcySweep { eps_list: Vec<f64> },
    NSweep {
        n_list: Vec<u32>,
        #[serde(default = "yes")]
        include_exact: bool,
    },
    PSweep { p_list: Vec<f64> },
    Mms(MmsConfig),
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub grid: GridSpec,
    pub model: ModelParams,
    pub sources: SourcesConfig,
    pub initial: InitialConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub experiment: Option<ExperimentConfig>,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ChbError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ChbError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // relative field files are resolved next to the config
        if let Some(base) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            if let PhiInit::FromFile { path } = &mut cfg.initial.phi {
                fix(path);
            }
            if let SigmaInit::FromFile { path } = &mut cfg.initial.sigma {
                fix(path);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| ChbError::Config(e.to_string()))
    }

    /// Replaces the noise seed of the initial data.
    pub fn set_seed(&mut self, s: u64) {
        if let PhiInit::ConstantMean { seed, .. } = &mut self.initial.phi {
            *seed = s;
        }
    }

    pub fn ch_params(&self) -> ChStepParams {
        ChStepParams {
            newton_tol: self.numerics.newton_tol,
            newton_max_iter: self.numerics.newton_max_iter,
            krylov_tol: self.numerics.ch_krylov_tol,
            ..ChStepParams::new(self.time.dt)
        }
    }

    pub fn nutrient_params(&self) -> NutrientStepParams {
        NutrientStepParams {
            sigma_floor: self.numerics.sigma_floor,
            mobility_face_rule: self.numerics.mobility_face_rule,
            ..NutrientStepParams::new(self.time.dt)
        }
    }

    pub fn flow_params(&self) -> FlowSolveParams {
        FlowSolveParams {
            krylov_tol: self.flow.krylov_tol,
            krylov_max_iter: self.flow.krylov_max_iter,
            flip_pressure_sign: self.flow.flip_pressure_sign,
            ..FlowSolveParams::new(self.model.epsilon)
        }
    }

    /// Structural checks that do not need the initial data.
    pub fn validate_static(&self) -> Result<()> {
        self.grid.validate()?;
        self.model.validate()?;
        if !(self.time.dt > 0.0 && self.time.t_end >= 0.0 && self.time.t_end.is_finite()) {
            return Err(ChbError::Config("time.dt must be positive and time.t_end >= 0".into()));
        }
        self.ch_params().validate()?;
        self.nutrient_params().validate()?;
        self.flow_params().validate()?;
        Ok(())
    }

    pub fn initial_phi(&self) -> Result<ScalarField> {
        let g = self.grid;
        let (lx, ly) = (g.lx, g.ly);
        let pi = std::f64::consts::PI;
        match &self.initial.phi {
            PhiInit::ConstantMean {
                mean,
                amplitude,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let v = (0..g.num_cells())
                    .map(|_| {
                        let r: f64 = rng.gen_range(-1.0..=1.0);
                        mean + amplitude * r
                    })
                    .collect();
                ScalarField::from_values(g, v)
            }
            PhiInit::TanhBlob {
                inside,
                outside,
                radius,
                width,
                center,
            } => {
                let [cx, cy] = center.unwrap_or([0.5 * lx, 0.5 * ly]);
                Ok(ScalarField::from_fn(g, |x, y| {
                    let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                    outside + (inside - outside) * 0.5 * (1.0 - ((r - radius) / width).tanh())
                }))
            }
            PhiInit::Cosine {
                mean,
                amplitude,
                kx,
                ky,
            } => Ok(ScalarField::from_fn(g, |x, y| {
                mean + amplitude * (*kx as f64 * pi * x / lx).cos() * (*ky as f64 * pi * y / ly).cos()
            })),
            PhiInit::FromFile { path } => read_field(path, g),
        }
    }

    pub fn initial_sigma(&self) -> Result<ScalarField> {
        let g = self.grid;
        let (lx, ly) = (g.lx, g.ly);
        let pi = std::f64::consts::PI;
        match &self.initial.sigma {
            SigmaInit::Constant { value } => Ok(ScalarField::constant(g, *value)),
            SigmaInit::Bump {
                amplitude,
                radius,
                base,
                center,
            } => {
                let [cx, cy] = center.unwrap_or([0.5 * lx, 0.5 * ly]);
                Ok(ScalarField::from_fn(g, |x, y| {
                    let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                    base + amplitude * (1.0 - r2 / (radius * radius)).max(0.0)
                }))
            }
            SigmaInit::Cosine {
                mean,
                amplitude,
                kx,
                ky,
            } => Ok(ScalarField::from_fn(g, |x, y| {
                mean + amplitude * (*kx as f64 * pi * x / lx).cos() * (*ky as f64 * pi * y / ly).cos()
            })),
            SigmaInit::FromFile { path } => read_field(path, g),
        }
    }
}

fn read_field(path: &Path, g: GridSpec) -> Result<ScalarField> {
    let snap = snapshot::read(path)?;
    if *snap.field.grid() != g {
        return Err(ChbError::Config(format!(
            "field file {} does not match the configured grid",
            path.display()
        )));
    }
    Ok(snap.field)
}
