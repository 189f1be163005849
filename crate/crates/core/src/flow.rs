//! Brinkman and Darcy flow on the MAC grid with free-slip walls.
//!
//! Momentum balance `-eps div(D u) + u - grad pi = force` with `div u = 0`
//! and `u.n = 0`; `eps = 0` is Darcy's law `u = grad pi + force`.
//!
//! The symmetric gradient lives on cells (`D11`, `D22`) and nodes (`D12`,
//! zero on the walls, which is the free-slip condition). With that layout
//! the viscous operator maps gradients to gradients,
//! `A grad q = grad(q - eps lap q)`, so the Schur complement of the saddle
//! system is `lap (1 - eps lap)^-1` and Uzawa preconditioned with its
//! inverse converges in one sweep up to the accuracy of the inner solve.

use serde::{Deserialize, Serialize};

use crate::error::{ChbError, Result};
use crate::grid::{
    divergence, face_average, gradient, laplacian_into, FaceField, GridSpec, ScalarField,
};
use crate::krylov::{cg, KrylovStats};
use crate::spectral::{Basis1d, Separable2d};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PressureGauge {
    #[default]
    ZeroMean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSolveParams {
    pub epsilon: f64,
    pub krylov_tol: f64,
    pub krylov_max_iter: usize,
    #[serde(default)]
    pub pressure_gauge: PressureGauge,
    /// Return `-pi` instead of `pi`; `u` is unaffected.
    #[serde(default)]
    pub flip_pressure_sign: bool,
}

impl FlowSolveParams {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            krylov_tol: 1e-10,
            krylov_max_iter: 500,
            pressure_gauge: PressureGauge::ZeroMean,
            flip_pressure_sign: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(ChbError::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.krylov_tol > 0.0) || self.krylov_max_iter == 0 {
            return Err(ChbError::Config("invalid flow solver tolerances".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct FlowSolution {
    pub u: FaceField,
    pub pi: ScalarField,
    /// Inner iterations: pressure Poisson solves plus viscous solves.
    pub iterations: usize,
    /// Uzawa sweeps (0 for Darcy).
    pub outer_iterations: usize,
    /// `|div u|_inf` after the solve.
    pub div_max: f64,
}

/// `mu_face grad phi - chi phi_face grad sigma` with arithmetic face averages.
pub fn korteweg_force(phi: &ScalarField, mu: &ScalarField, sigma: &ScalarField, chi: f64) -> Result<FaceField> {
    phi.check_grid(mu)?;
    phi.check_grid(sigma)?;
    let mut f = face_average(mu).mul(&gradient(phi));
    if chi != 0.0 {
        f.axpy(-chi, &face_average(phi).mul(&gradient(sigma)));
    }
    Ok(f)
}

/// Velocity with stream function `psi` (sampled at nodes, forced to zero
/// on the walls): `u = d psi/dy`, `v = -d psi/dx`. Discretely divergence-free.
pub fn curl_of_stream(grid: GridSpec, psi: impl Fn(f64, f64) -> f64) -> FaceField {
    let g = grid;
    let node = |i: usize, j: usize| {
        if i == 0 || j == 0 || i == g.nx || j == g.ny {
            0.0
        } else {
            let (x, y) = g.node(i, j);
            psi(x, y)
        }
    };
    let mut u = FaceField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            u.x_mut()[g.x_face(i, j)] = (node(i, j + 1) - node(i, j)) / g.hy();
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            u.y_mut()[g.y_face(i, j)] = -(node(i + 1, j) - node(i, j)) / g.hx();
        }
    }
    u
}

/// Symmetric-gradient components: `D11`, `D22` per cell and `D12` per node.
fn strain(u: &FaceField) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let g = *u.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (rhx, rhy) = (1.0 / g.hx(), 1.0 / g.hy());
    let mut d11 = vec![0.0; nx * ny];
    let mut d22 = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let c = g.cell(i, j);
            d11[c] = (u.x_at(i + 1, j) - u.x_at(i, j)) * rhx;
            d22[c] = (u.y_at(i, j + 1) - u.y_at(i, j)) * rhy;
        }
    }
    let mut d12 = vec![0.0; (nx + 1) * (ny + 1)];
    for j in 1..ny {
        for i in 1..nx {
            d12[i + (nx + 1) * j] = 0.5
                * ((u.x_at(i, j) - u.x_at(i, j - 1)) * rhy + (u.y_at(i, j) - u.y_at(i - 1, j)) * rhx);
        }
    }
    (d11, d22, d12)
}

/// `|D u|^2 = sum D11^2 + D22^2 + 2 D12^2`, each weighted by `hx hy`.
pub fn symmetric_gradient_norm_sq(u: &FaceField) -> f64 {
    let (d11, d22, d12) = strain(u);
    let s: f64 = d11.iter().chain(&d22).map(|v| v * v).sum::<f64>()
        + 2.0 * d12.iter().map(|v| v * v).sum::<f64>();
    s * u.grid().cell_volume()
}

/// `-div(D u)` on interior faces; the adjoint of the strain map.
fn viscous(u: &FaceField) -> FaceField {
    let g = *u.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (rhx, rhy) = (1.0 / g.hx(), 1.0 / g.hy());
    let (d11, d22, d12) = strain(u);
    let node = |i: usize, j: usize| d12[i + (nx + 1) * j];
    let mut out = FaceField::zeros(g);
    for j in 0..ny {
        for i in 1..nx {
            out.x_mut()[g.x_face(i, j)] = (d11[g.cell(i - 1, j)] - d11[g.cell(i, j)]) * rhx
                + (node(i, j) - node(i, j + 1)) * rhy;
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            out.y_mut()[g.y_face(i, j)] = (d22[g.cell(i, j - 1)] - d22[g.cell(i, j)]) * rhy
                + (node(i, j) - node(i + 1, j)) * rhx;
        }
    }
    out
}

/// Reusable solver with the spectral preconditioners of the pressure
/// Poisson problem and of the viscous operator.
#[derive(Clone)]
pub struct FlowSolver {
    grid: GridSpec,
    params: FlowSolveParams,
    cells: Separable2d,
    xfaces: Separable2d,
    yfaces: Separable2d,
}

impl FlowSolver {
    pub fn new(grid: GridSpec, params: FlowSolveParams) -> Result<Self> {
        grid.validate()?;
        params.validate()?;
        let (nx, ny, hx, hy) = (grid.nx, grid.ny, grid.hx(), grid.hy());
        Ok(Self {
            grid,
            params,
            cells: Separable2d::new(Basis1d::cosine(nx, hx), Basis1d::cosine(ny, hy)),
            xfaces: Separable2d::new(Basis1d::sine(nx, hx), Basis1d::cosine(ny, hy)),
            yfaces: Separable2d::new(Basis1d::cosine(nx, hx), Basis1d::sine(ny, hy)),
        })
    }

    pub fn params(&self) -> &FlowSolveParams {
        &self.params
    }

    pub fn set_epsilon(&mut self, epsilon: f64) {
        self.params.epsilon = epsilon;
    }

    /// Zero-mean solution of `lap q = rhs` (Neumann).
    fn poisson(&self, rhs: &[f64]) -> Result<(Vec<f64>, KrylovStats)> {
        let g = self.grid;
        let n = g.num_cells();
        let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mean = rhs.iter().sum::<f64>() / n as f64;
        if mean.abs() > 1e-12 * scale.max(1.0) {
            return Err(ChbError::Invariant(format!(
                "pressure equation is incompatible: right-hand side mean {mean:e}"
            )));
        }
        // -lap q = -(rhs - mean), positive semidefinite
        let b: Vec<f64> = rhs.iter().map(|v| mean - v).collect();
        let mut q = vec![0.0; n];
        let apply = |v: &[f64], o: &mut [f64]| {
            laplacian_into(&g, v, o);
            o.iter_mut().for_each(|x| *x = -*x);
        };
        let precond = |v: &[f64], o: &mut [f64]| {
            o.copy_from_slice(v);
            self.cells.apply_symbol(o, |lx, ly| {
                let l = lx + ly;
                if l > 0.0 {
                    1.0 / l
                } else {
                    0.0
                }
            });
        };
        let stats = cg(apply, precond, &b, &mut q, self.params.krylov_tol * 1e-3, self.params.krylov_max_iter)?;
        let qm = q.iter().sum::<f64>() / n as f64;
        q.iter_mut().for_each(|v| *v -= qm);
        Ok((q, stats))
    }

    fn pack(&self, u: &FaceField, out: &mut [f64]) {
        let g = self.grid;
        let mut k = 0;
        for j in 0..g.ny {
            for i in 1..g.nx {
                out[k] = u.x_at(i, j);
                k += 1;
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                out[k] = u.y_at(i, j);
                k += 1;
            }
        }
    }

    fn unpack(&self, v: &[f64]) -> FaceField {
        let g = self.grid;
        let mut u = FaceField::zeros(g);
        let mut k = 0;
        for j in 0..g.ny {
            for i in 1..g.nx {
                u.x_mut()[g.x_face(i, j)] = v[k];
                k += 1;
            }
        }
        for j in 1..g.ny {
            for i in 0..g.nx {
                u.y_mut()[g.y_face(i, j)] = v[k];
                k += 1;
            }
        }
        u
    }

    /// Solves `(I - eps div D) u = f` on interior faces.
    fn viscous_solve(&self, f: &FaceField) -> Result<(FaceField, KrylovStats)> {
        let g = self.grid;
        let eps = self.params.epsilon;
        let nxf = (g.nx - 1) * g.ny;
        let n = nxf + g.nx * (g.ny - 1);
        let mut b = vec![0.0; n];
        self.pack(f, &mut b);
        let mut x = b.clone();
        let apply = |v: &[f64], o: &mut [f64]| {
            let w = self.unpack(v);
            let mut a = viscous(&w);
            a.scale(eps);
            a.axpy(1.0, &w);
            self.pack(&a, o);
        };
        // exact on divergence-free fields: A = I - (eps/2) lap there
        let precond = |v: &[f64], o: &mut [f64]| {
            o.copy_from_slice(v);
            let (ox, oy) = o.split_at_mut(nxf);
            self.xfaces.apply_symbol(ox, |lx, ly| 1.0 / (1.0 + 0.5 * eps * (lx + ly)));
            self.yfaces.apply_symbol(oy, |lx, ly| 1.0 / (1.0 + 0.5 * eps * (lx + ly)));
        };
        let stats = cg(apply, precond, &b, &mut x, self.params.krylov_tol * 1e-2, self.params.krylov_max_iter)?;
        Ok((self.unpack(&x), stats))
    }

    fn momentum_residual(&self, u: &FaceField, pi: &ScalarField, f: &FaceField) -> FaceField {
        // f + grad pi - A u
        let mut r = f.clone();
        r.axpy(1.0, &gradient(pi));
        r.axpy(-1.0, u);
        if self.params.epsilon > 0.0 {
            r.axpy(-self.params.epsilon, &viscous(u));
        }
        r
    }

    pub fn solve(&self, force: &FaceField) -> Result<FlowSolution> {
        let g = self.grid;
        if *force.grid() != g {
            return Err(ChbError::GridMismatch);
        }
        if !force.is_finite() {
            return Err(ChbError::Numeric("non-finite flow forcing".into()));
        }
        if force.boundary_normal_max() != 0.0 {
            return Err(ChbError::Invariant(
                "flow forcing must have zero normal component on the walls".into(),
            ));
        }
        let eps = self.params.epsilon;
        let mut iterations = 0;
        let mut outer = 0;
        let (u, mut pi) = if eps == 0.0 {
            let (q, st) = self.poisson(divergence(force).values())?;
            iterations += st.iterations;
            let pi = ScalarField::from_values(g, q.iter().map(|v| -v).collect())?;
            let mut u = force.clone();
            u.axpy(1.0, &gradient(&pi));
            (u, pi)
        } else {
            let fnorm = force.norm_sq().sqrt();
            let mut u = FaceField::zeros(g);
            let mut pi = ScalarField::zeros(g);
            let mut r = force.clone();
            loop {
                let (du, st) = self.viscous_solve(&r)?;
                iterations += st.iterations;
                u.axpy(1.0, &du);
                // project with the exact Schur inverse
                let (q, st) = self.poisson(divergence(&u).values())?;
                iterations += st.iterations;
                let q = ScalarField::from_values(g, q)?;
                u.axpy(-1.0, &gradient(&q));
                let lq = crate::grid::laplacian_neumann(&q);
                pi.axpy(-1.0, &q);
                pi.axpy(eps, &lq);
                outer += 1;
                r = self.momentum_residual(&u, &pi, force);
                let rel = r.norm_sq().sqrt() / fnorm.max(f64::MIN_POSITIVE);
                if rel <= self.params.krylov_tol || fnorm == 0.0 {
                    break;
                }
                if outer >= 20 {
                    return Err(ChbError::NoConvergence {
                        solver: "Uzawa",
                        iterations: outer,
                        residual: rel,
                        history: vec![rel],
                    });
                }
            }
            (u, pi)
        };
        let m = pi.mean();
        pi.values_mut().iter_mut().for_each(|v| *v -= m);
        if self.params.flip_pressure_sign {
            pi.scale(-1.0);
        }
        let div_max = divergence(&u).max_abs();
        Ok(FlowSolution {
            u,
            pi,
            iterations,
            outer_iterations: outer,
            div_max,
        })
    }
}

/// Darcy flow `u = grad pi + force`, `-lap pi = div force`.
pub fn darcy_solve(force: &FaceField, params: &FlowSolveParams) -> Result<(FaceField, ScalarField)> {
    let p = FlowSolveParams { epsilon: 0.0, ..*params };
    let s = FlowSolver::new(*force.grid(), p)?.solve(force)?;
    Ok((s.u, s.pi))
}

/// Brinkman flow with `params.epsilon > 0`.
pub fn brinkman_solve(force: &FaceField, params: &FlowSolveParams) -> Result<(FaceField, ScalarField)> {
    if !(params.epsilon > 0.0) {
        return Err(ChbError::Config("brinkman_solve needs epsilon > 0".into()));
    }
    let s = FlowSolver::new(*force.grid(), *params)?.solve(force)?;
    Ok((s.u, s.pi))
}

/// `|u - v|` in the face `L^2` norm.
pub fn velocity_gap(u: &FaceField, v: &FaceField) -> f64 {
    let mut d = u.clone();
    d.axpy(-1.0, v);
    d.norm_sq().sqrt()
}
