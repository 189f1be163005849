//! Manufactured-solution refinement study.
//!
//! Scalars: `phi* = A e^-t C`, `sigma* = 1 + B e^-t C` with
//! `C = cos(kx x) cos(ky y)`, zero velocity, logarithmic potential and no
//! sources; the residuals of both equations are injected as forcing.
//! Flow: the stationary Brinkman problem with the stream function
//! `sin(kx x) sin(ky y)` and pressure `C`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::cahn_hilliard::{ChSolver, ChStepParams};
use crate::constitutive::{alpha, alpha_prime, beta_prime, Regularization, SourceSpec};
use crate::error::{ChbError, Result};
use crate::flow::{FlowSolveParams, FlowSolver};
use crate::grid::{FaceField, GridSpec, ScalarField};
use crate::model::ModelParams;
use crate::nutrient::{MobilityFaceRule, NutrientSolver, NutrientStepParams};

use super::config::MmsConfig;

/// Smallest acceptable observed order for the scalars.
pub const MIN_SCALAR_ORDER: f64 = 1.5;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalarRow {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub err_phi: f64,
    pub err_sigma: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlowRow {
    pub n: usize,
    pub h: f64,
    pub err_u: f64,
    pub err_u_darcy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MmsTable {
    pub scalar: Vec<ScalarRow>,
    pub flow: Vec<FlowRow>,
    /// Orders between consecutive grids.
    pub order_phi: Vec<f64>,
    pub order_sigma: Vec<f64>,
    pub order_u: Vec<f64>,
    pub pass: bool,
}

impl MmsTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,h,dt,steps,err_phi,err_sigma,err_u,err_u_darcy\n");
        for (r, f) in self.scalar.iter().zip(&self.flow) {
            s += &format!(
                "{},{:e},{:e},{},{:e},{:e},{:e},{:e}\n",
                r.n, r.h, r.dt, r.steps, r.err_phi, r.err_sigma, f.err_u, f.err_u_darcy
            );
        }
        s
    }
}

fn orders(h: &[f64], e: &[f64]) -> Vec<f64> {
    (1..e.len())
        .map(|k| (e[k - 1] / e[k]).ln() / (h[k - 1] / h[k]).ln())
        .collect()
}

struct Manufactured {
    kx: f64,
    ky: f64,
    a0: f64,
    b0: f64,
    mp: ModelParams,
}

impl Manufactured {
    fn amp(&self, t: f64) -> (f64, f64) {
        let e = (-t).exp();
        (self.a0 * e, self.b0 * e)
    }

    fn shape(&self, x: f64, y: f64) -> (f64, f64) {
        let c = (self.kx * x).cos() * (self.ky * y).cos();
        let g2 = (self.kx * (self.kx * x).sin() * (self.ky * y).cos()).powi(2)
            + (self.ky * (self.kx * x).cos() * (self.ky * y).sin()).powi(2);
        (c, g2)
    }

    fn phi(&self, t: f64, x: f64, y: f64) -> f64 {
        self.amp(t).0 * self.shape(x, y).0
    }

    fn sigma(&self, t: f64, x: f64, y: f64) -> f64 {
        1.0 + self.amp(t).1 * self.shape(x, y).0
    }

    /// Residual of the order-parameter equation at `(t, x, y)`.
    fn phi_forcing(&self, t: f64, x: f64, y: f64) -> f64 {
        let (a, b) = self.amp(t);
        let (c, g2) = self.shape(x, y);
        let k = self.kx * self.kx + self.ky * self.ky;
        let ph = a * c;
        let bp = beta_prime(ph).expect("manufactured phi stays inside (-1, 1)");
        let bpp = 4.0 * ph / (1.0 - ph * ph).powi(2);
        let lap_mu = -k * k * ph - k * ph * bp + bpp * a * a * g2 + self.mp.lambda * k * ph
            + self.mp.chi * k * b * c;
        -ph - lap_mu + self.mp.ell * ph
    }

    /// Residual of the nutrient equation at `(t, x, y)`.
    fn sigma_forcing(&self, t: f64, x: f64, y: f64) -> f64 {
        let (a, b) = self.amp(t);
        let (c, g2) = self.shape(x, y);
        let k = self.kx * self.kx + self.ky * self.ky;
        let s = 1.0 + b * c;
        let p = self.mp.p;
        let al = alpha(s, p).expect("manufactured sigma is positive");
        let alp = alpha_prime(s, p).expect("manufactured sigma is positive");
        let div_chem = alp * a * b * g2 - al * k * a * c;
        -b * c + k * b * c + self.mp.chi * div_chem
    }
}

fn l2_error(f: &ScalarField, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let ex = ScalarField::from_fn(*f.grid(), exact);
    let mut d = f.clone();
    d.axpy(-1.0, &ex);
    d.norm_sq().sqrt()
}

/// One refinement level of the scalar study.
pub fn scalar_level(
    grid: GridSpec,
    mp: &ModelParams,
    mc: &MmsConfig,
    rule: MobilityFaceRule,
) -> Result<ScalarRow> {
    let mut mp = *mp;
    mp.regularization = Regularization::ExactLog;
    mp.penalty_exponent = None;
    let m = Manufactured {
        kx: PI / grid.lx,
        ky: PI / grid.ly,
        a0: mc.phi_amplitude,
        b0: mc.sigma_amplitude,
        mp,
    };
    if !(m.a0.abs() < 1.0 && m.b0.abs() < 1.0) {
        return Err(ChbError::Config("manufactured amplitudes must lie in (-1, 1)".into()));
    }
    let h = grid.h_min();
    let steps = ((mc.t_end / (mc.dt_factor * h * h)).ceil() as usize).max(1);
    let dt = mc.t_end / steps as f64;
    let ch = ChSolver::new(grid, &mp, ChStepParams::new(dt))?;
    let nut = NutrientSolver::new(
        grid,
        &mp,
        NutrientStepParams {
            mobility_face_rule: rule,
            ..NutrientStepParams::new(dt)
        },
    )?;
    let src = SourceSpec::zero();
    let u = FaceField::zeros(grid);
    let mut phi = ScalarField::from_fn(grid, |x, y| m.phi(0.0, x, y));
    let mut sigma = ScalarField::from_fn(grid, |x, y| m.sigma(0.0, x, y));
    for k in 1..=steps {
        let t = k as f64 * dt;
        let f1 = ScalarField::from_fn(grid, |x, y| m.phi_forcing(t, x, y));
        let f2 = ScalarField::from_fn(grid, |x, y| m.sigma_forcing(t, x, y));
        let (p1, _, _) = ch.step(&phi, &sigma, &u, &src, Some(&f1))?;
        let s1 = nut.step(&sigma, &phi, &u, &src, Some(&f2))?;
        phi = p1;
        sigma = s1;
    }
    let t = mc.t_end;
    Ok(ScalarRow {
        n: grid.nx,
        h,
        dt,
        steps,
        err_phi: l2_error(&phi, |x, y| m.phi(t, x, y)),
        err_sigma: l2_error(&sigma, |x, y| m.sigma(t, x, y)),
    })
}

/// Stationary flow level: errors of the Brinkman solve at `epsilon` and of
/// the Darcy solve against the same manufactured velocity.
pub fn flow_level(grid: GridSpec, epsilon: f64, amplitude: f64) -> Result<FlowRow> {
    let (kx, ky) = (PI / grid.lx, PI / grid.ly);
    let k = kx * kx + ky * ky;
    let ux = |x: f64, y: f64| amplitude * ky * (kx * x).sin() * (ky * y).cos();
    let uy = |x: f64, y: f64| -amplitude * kx * (kx * x).cos() * (ky * y).sin();
    let px = |x: f64, y: f64| -kx * (kx * x).sin() * (ky * y).cos();
    let py = |x: f64, y: f64| -ky * (kx * x).cos() * (ky * y).sin();
    let exact = FaceField::from_fns(grid, ux, uy);
    let mut err = [0.0; 2];
    for (slot, eps) in [epsilon, 0.0].into_iter().enumerate() {
        // u - eps div(D u) - grad pi = f, and div(D u) = lap(u)/2 for div-free u
        let c = 1.0 + 0.5 * eps * k;
        let mut f = FaceField::from_fns(
            grid,
            |x, y| c * ux(x, y) - px(x, y),
            |x, y| c * uy(x, y) - py(x, y),
        );
        f.zero_boundary_normal();
        let params = FlowSolveParams {
            krylov_tol: 1e-12,
            ..FlowSolveParams::new(eps)
        };
        let sol = FlowSolver::new(grid, params)?.solve(&f)?;
        let mut d = sol.u;
        d.axpy(-1.0, &exact);
        err[slot] = d.norm_sq().sqrt();
    }
    Ok(FlowRow {
        n: grid.nx,
        h: grid.h_min(),
        err_u: err[0],
        err_u_darcy: err[1],
    })
}

/// Runs both studies over `mc.grids` on the box of `base`.
pub fn run_mms(base: GridSpec, mp: &ModelParams, mc: &MmsConfig, rule: MobilityFaceRule) -> Result<MmsTable> {
    if mc.grids.is_empty() {
        return Err(ChbError::Config("mms needs at least one grid".into()));
    }
    let mut scalar = Vec::new();
    let mut flow = Vec::new();
    for &n in &mc.grids {
        let grid = GridSpec::new(n, n, base.lx, base.ly)?;
        scalar.push(scalar_level(grid, mp, mc, rule)?);
        flow.push(flow_level(grid, mc.flow_epsilon, 1.0)?);
    }
    let h: Vec<f64> = scalar.iter().map(|r| r.h).collect();
    let order_phi = orders(&h, &scalar.iter().map(|r| r.err_phi).collect::<Vec<_>>());
    let order_sigma = orders(&h, &scalar.iter().map(|r| r.err_sigma).collect::<Vec<_>>());
    let order_u = orders(&h, &flow.iter().map(|r| r.err_u).collect::<Vec<_>>());
    let exact_zero = scalar.iter().all(|r| r.err_phi == 0.0 && r.err_sigma == 0.0);
    let pass = exact_zero
        || order_phi
            .iter()
            .chain(&order_sigma)
            .all(|&o| o >= MIN_SCALAR_ORDER);
    Ok(MmsTable {
        scalar,
        flow,
        order_phi,
        order_sigma,
        order_u,
        pass,
    })
}
