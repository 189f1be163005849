//! One convex-concave time step of the Cahn-Hilliard-Oono pair
//!
//! ```text
//! (phi1 - phi0)/dt + div(phi0_up u) - lap mu1 = h(sigma0, phi0) - ell phi1
//! mu1 = (1/n) lap^2 phi1 - lap phi1 + beta~(phi1) - lambda phi0 - chi sigma0
//! ```
//!
//! `mu1` is eliminated through its defining relation and Newton's method is
//! run on `phi1` alone. Each linearisation `c - lap (nu lap^2 - lap + D)` is
//! solved by GMRES preconditioned with its constant-coefficient cousin, which
//! the cosine transform diagonalises. The mean of every Newton update is set
//! by hand, so the discrete mass balance holds to rounding at every iterate.

use serde::{Deserialize, Serialize};

use crate::constitutive::{Potential, SourceSpec};
use crate::error::{ChbError, Result};
use crate::grid::{
    divergence, laplacian_bound, laplacian_into, upwind_flux, FaceField, GridSpec, ScalarField,
};
use crate::krylov::gmres;
use crate::model::ModelParams;
use crate::spectral::{Basis1d, Separable2d};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    /// Monotone part and Laplacians implicit, `-lambda phi` and `-chi sigma` explicit.
    #[default]
    ConvexConcave,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChStepParams {
    pub dt: f64,
    /// Tolerance on `dt |R|_inf`, i.e. the residual measured in units of `phi`.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub krylov_tol: f64,
    pub krylov_restart: usize,
    pub krylov_max_iter: usize,
    pub splitting: Splitting,
}

impl ChStepParams {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            krylov_tol: 1e-10,
            krylov_restart: 40,
            krylov_max_iter: 400,
            splitting: Splitting::ConvexConcave,
        }
    }

    pub fn with_dt(self, dt: f64) -> Self {
        Self { dt, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ChbError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.newton_tol > 0.0 && self.krylov_tol > 0.0) {
            return Err(ChbError::Config("solver tolerances must be positive".into()));
        }
        if self.newton_max_iter == 0 || self.krylov_max_iter == 0 || self.krylov_restart == 0 {
            return Err(ChbError::Config("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// Solver statistics of one accepted step.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ChStepReport {
    pub newton_iterations: usize,
    pub krylov_iterations: usize,
    /// `dt |R|_inf` before each Newton update and after the last one.
    pub residual_history: Vec<f64>,
    /// `dt |R|_2`, the line-search merit; nonincreasing.
    pub merit_history: Vec<f64>,
    /// Damping factors of the accepted updates.
    pub step_lengths: Vec<f64>,
}

/// Reusable step operator: holds the potential (with its tabulated
/// primitive) and the spectral preconditioner.
#[derive(Clone)]
pub struct ChSolver {
    grid: GridSpec,
    mp: ModelParams,
    potential: Potential,
    params: ChStepParams,
    basis: Separable2d,
}

struct Workspace {
    lap: Vec<f64>,
    tmp: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            lap: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

impl ChSolver {
    pub fn new(grid: GridSpec, mp: &ModelParams, params: ChStepParams) -> Result<Self> {
        grid.validate()?;
        mp.validate()?;
        params.validate()?;
        let potential = Potential::new(mp.potential())?;
        Ok(Self::with_potential(grid, mp, potential, params))
    }

    /// Reuses an already tabulated potential.
    pub fn with_potential(
        grid: GridSpec,
        mp: &ModelParams,
        potential: Potential,
        params: ChStepParams,
    ) -> Self {
        let basis = Separable2d::new(
            Basis1d::cosine(grid.nx, grid.hx()),
            Basis1d::cosine(grid.ny, grid.hy()),
        );
        Self {
            grid,
            mp: *mp,
            potential,
            params,
            basis,
        }
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn params(&self) -> &ChStepParams {
        &self.params
    }

    pub fn set_dt(&mut self, dt: f64) {
        self.params.dt = dt;
    }

    fn nu(&self) -> f64 {
        self.potential.inverse_index()
    }

    /// `mu = nu lap^2 phi - lap phi + beta~(phi) - lambda phi_old - chi sigma`.
    pub fn chemical_potential(
        &self,
        phi: &ScalarField,
        phi_old: &ScalarField,
        sigma: &ScalarField,
    ) -> Result<ScalarField> {
        phi.check_grid(phi_old)?;
        phi.check_grid(sigma)?;
        let explicit = self.explicit_part(phi_old, sigma);
        let mut ws = Workspace::new(self.grid.num_cells());
        let mut mu = vec![0.0; self.grid.num_cells()];
        self.mu_into(phi.values(), &explicit, &mut mu, &mut ws)?;
        ScalarField::from_values(self.grid, mu)
    }

    fn explicit_part(&self, phi_old: &ScalarField, sigma: &ScalarField) -> Vec<f64> {
        let (lambda, chi) = (self.potential.lambda(), self.mp.chi);
        phi_old
            .values()
            .iter()
            .zip(sigma.values())
            .map(|(p, s)| -lambda * p - chi * s)
            .collect()
    }

    fn mu_into(&self, phi: &[f64], explicit: &[f64], mu: &mut [f64], ws: &mut Workspace) -> Result<()> {
        let nu = self.nu();
        laplacian_into(&self.grid, phi, &mut ws.lap);
        if nu > 0.0 {
            laplacian_into(&self.grid, &ws.lap, &mut ws.tmp);
        }
        for c in 0..phi.len() {
            let bil = if nu > 0.0 { nu * ws.tmp[c] } else { 0.0 };
            mu[c] = bil - ws.lap[c] + self.potential.monotone(phi[c])? + explicit[c];
        }
        Ok(())
    }

    /// Advances `(phi, sigma, u)` by one step. `forcing` is an extra
    /// right-hand side of the `phi` equation (used by manufactured solutions).
    pub fn step(
        &self,
        phi0: &ScalarField,
        sigma0: &ScalarField,
        u: &FaceField,
        src: &SourceSpec,
        forcing: Option<&ScalarField>,
    ) -> Result<(ScalarField, ScalarField, ChStepReport)> {
        let g = self.grid;
        if *phi0.grid() != g || *sigma0.grid() != g || *u.grid() != g {
            return Err(ChbError::GridMismatch);
        }
        if let Some(f) = forcing {
            f.check_grid(phi0)?;
        }
        if self.potential.is_exact() {
            let m = phi0.max_abs();
            if !(m < 1.0) {
                return Err(ChbError::Domain {
                    function: "exact logarithmic potential",
                    value: m,
                });
            }
        }
        let dt = self.params.dt;
        let umax = u.max_abs();
        if umax > 0.0 {
            let limit = 0.5 * g.h_min() / umax;
            if dt > limit {
                return Err(ChbError::StepGuard {
                    guard: "advection CFL",
                    dt,
                    limit,
                });
            }
        }

        let n = g.num_cells();
        let c = 1.0 / dt + self.mp.ell;
        let nu = self.nu();
        let lbound = laplacian_bound(&g);
        let explicit = self.explicit_part(phi0, sigma0);
        let adv = divergence(&upwind_flux(phi0, u));
        let mut rhs1: Vec<f64> = phi0
            .values()
            .iter()
            .zip(sigma0.values())
            .zip(adv.values())
            .map(|((&p, &s), a)| p / dt - a + src.h(s, p))
            .collect();
        if let Some(f) = forcing {
            rhs1.iter_mut().zip(f.values()).for_each(|(r, v)| *r += v);
        }
        let rhs_norm = rhs1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let explicit_norm = explicit.iter().fold(0.0f64, |m, v| m.max(v.abs()));

        let mut ws = Workspace::new(n);
        let mut phi = phi0.values().to_vec();
        let mut mu = vec![0.0; n];
        let mut res = vec![0.0; n];

        // Residual of the phi equation, its size in phi units, and the level
        // below which rounding in the sixth-order stencil dominates.
        let evaluate = |phi: &[f64], mu: &mut [f64], res: &mut [f64], ws: &mut Workspace| -> Result<(f64, f64, f64)> {
            self.mu_into(phi, &explicit, mu, ws)?;
            laplacian_into(&g, mu, &mut ws.lap);
            let mut rmax = 0.0f64;
            let mut r2 = 0.0f64;
            let (mut pmax, mut mmax, mut bmax) = (0.0f64, 0.0f64, 0.0f64);
            for k in 0..phi.len() {
                res[k] = c * phi[k] - ws.lap[k] - rhs1[k];
                rmax = rmax.max(res[k].abs());
                r2 += res[k] * res[k];
                pmax = pmax.max(phi[k].abs());
                mmax = mmax.max(mu[k].abs());
                bmax = bmax.max((mu[k] - explicit[k]).abs());
            }
            if !rmax.is_finite() {
                return Err(ChbError::Numeric("non-finite Cahn-Hilliard residual".into()));
            }
            let terms = c * pmax
                + rhs_norm
                + lbound * (mmax + (nu * lbound * lbound + lbound) * pmax + bmax + explicit_norm);
            Ok((rmax / c, 16.0 * f64::EPSILON * terms / c, r2.sqrt() / c))
        };

        let (mut r, mut floor, mut merit) = evaluate(&phi, &mut mu, &mut res, &mut ws)?;
        let mut report = ChStepReport::default();
        report.residual_history.push(r);
        report.merit_history.push(merit);
        let scale = |phi: &[f64]| phi.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut converged = r <= self.params.newton_tol * scale(&phi) || r <= floor;

        let mut diag = vec![0.0; n];
        let mut delta = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut mu_trial = vec![0.0; n];
        let mut res_trial = vec![0.0; n];
        while !converged {
            if report.newton_iterations >= self.params.newton_max_iter {
                return Err(ChbError::NoConvergence {
                    solver: "Cahn-Hilliard Newton",
                    iterations: report.newton_iterations,
                    residual: r,
                    history: report.residual_history,
                });
            }
            for k in 0..n {
                diag[k] = self.potential.monotone_prime(phi[k])?;
            }
            let dbar = diag.iter().sum::<f64>() / n as f64;
            let b: Vec<f64> = res.iter().map(|v| -v).collect();
            delta.iter_mut().for_each(|v| *v = 0.0);
            let (mut l1, mut l2) = (vec![0.0; n], vec![0.0; n]);
            let apply = |v: &[f64], out: &mut [f64]| {
                // out = c v - lap(nu lap^2 v - lap v + D v)
                laplacian_into(&g, v, &mut l1);
                if nu > 0.0 {
                    laplacian_into(&g, &l1, &mut l2);
                }
                for k in 0..n {
                    let bil = if nu > 0.0 { nu * l2[k] } else { 0.0 };
                    l2[k] = bil - l1[k] + diag[k] * v[k];
                }
                laplacian_into(&g, &l2, &mut l1);
                for k in 0..n {
                    out[k] = c * v[k] - l1[k];
                }
            };
            let precond = |v: &[f64], out: &mut [f64]| {
                out.copy_from_slice(v);
                self.basis.apply_symbol(out, |lx, ly| {
                    let lam = lx + ly;
                    1.0 / (c + lam * (nu * lam * lam + lam + dbar))
                });
            };
            match gmres(
                apply,
                precond,
                &b,
                &mut delta,
                self.params.krylov_tol,
                self.params.krylov_restart,
                self.params.krylov_max_iter,
            ) {
                Ok(stats) => report.krylov_iterations += stats.iterations,
                // an inexact direction is still usable by the line search
                Err(ChbError::NoConvergence {
                    iterations,
                    residual,
                    ..
                }) if residual < 1e-3 => report.krylov_iterations += iterations,
                Err(e) => return Err(e),
            }
            // exact mass balance: mean(R1) is linear in the mean of the update
            let target = -res.iter().sum::<f64>() / (n as f64 * c);
            let shift = target - delta.iter().sum::<f64>() / n as f64;
            delta.iter_mut().for_each(|v| *v += shift);

            let mut t = 1.0f64;
            if self.potential.is_exact() {
                for k in 0..n {
                    let d = delta[k];
                    let room = if d > 0.0 {
                        (1.0 - phi[k]) / d
                    } else if d < 0.0 {
                        (-1.0 - phi[k]) / d
                    } else {
                        f64::INFINITY
                    };
                    t = t.min(0.99 * room);
                }
            }
            let mut accepted = None;
            for _ in 0..40 {
                for k in 0..n {
                    trial[k] = phi[k] + t * delta[k];
                }
                let admissible = trial.iter().all(|&v| self.potential.admissible(v));
                if admissible {
                    if let Ok((rt, ft, mt)) = evaluate(&trial, &mut mu_trial, &mut res_trial, &mut ws) {
                        if mt <= (1.0 - 1e-4 * t) * merit || rt <= ft {
                            accepted = Some((rt, ft, mt));
                            break;
                        }
                    }
                }
                t *= 0.5;
            }
            let Some((rt, ft, mt)) = accepted else {
                if r <= 64.0 * floor {
                    // stagnation at the rounding level of the stencil
                    break;
                }
                return Err(ChbError::NoConvergence {
                    solver: "Cahn-Hilliard line search",
                    iterations: report.newton_iterations,
                    residual: r,
                    history: report.residual_history,
                });
            };
            std::mem::swap(&mut phi, &mut trial);
            std::mem::swap(&mut mu, &mut mu_trial);
            std::mem::swap(&mut res, &mut res_trial);
            r = rt;
            floor = ft;
            merit = mt;
            report.newton_iterations += 1;
            report.step_lengths.push(t);
            report.residual_history.push(r);
            report.merit_history.push(merit);
            converged = r <= self.params.newton_tol * scale(&phi) || r <= floor;
        }
        debug_assert!(
            report.merit_history.windows(2).all(|w| w[1] <= w[0]) || r <= floor,
            "Newton merit increased: {:?}",
            report.merit_history
        );
        if self.potential.is_exact() && !phi.iter().all(|v| v.abs() < 1.0) {
            return Err(ChbError::Invariant("accepted phi left (-1, 1)".into()));
        }
        Ok((
            ScalarField::from_values(g, phi)?,
            ScalarField::from_values(g, mu)?,
            report,
        ))
    }
}

/// One step with a freshly built solver; see [`ChSolver::step`].
pub fn ch_step(
    phi: &ScalarField,
    sigma: &ScalarField,
    u: &FaceField,
    src: &SourceSpec,
    mp: &ModelParams,
    sp: &ChStepParams,
) -> Result<(ScalarField, ScalarField)> {
    let solver = ChSolver::new(*phi.grid(), mp, *sp)?;
    let (phi, mu, _) = solver.step(phi, sigma, u, src, None)?;
    Ok((phi, mu))
}

/// Integrates `m' + ell m = hbar` with the stepping of [`ChSolver::step`]
/// (implicit `ell m`, explicit `hbar`). `hbar[k]` is used on step `k`;
/// returns `m` at the `hbar.len() + 1` time levels.
pub fn mass_ode_reference(m0: f64, ell: f64, hbar: &[f64], dt: f64) -> Result<Vec<f64>> {
    if !(m0.abs() < 1.0) {
        return Err(ChbError::Config(format!("initial mean must lie in (-1, 1), got {m0}")));
    }
    if !(dt > 0.0 && ell > 0.0) {
        return Err(ChbError::Config("dt and ell must be positive".into()));
    }
    let mut out = Vec::with_capacity(hbar.len() + 1);
    let mut m = m0;
    out.push(m);
    for h in hbar {
        m = (m / dt + h) / (1.0 / dt + ell);
        out.push(m);
    }
    Ok(out)
}

/// [`mass_ode_reference`] with `hbar` sampled from a function of time at
/// the start of each step, over `round(t_end/dt)` steps.
pub fn mass_ode_reference_fn(
    m0: f64,
    ell: f64,
    hbar: impl Fn(f64) -> f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    let steps = (t_end / dt).round() as usize;
    let samples: Vec<f64> = (0..steps).map(|k| hbar(k as f64 * dt)).collect();
    mass_ode_reference(m0, ell, &samples, dt)
}

/// `delta = 1 - max(|m0|, H/ell)`: the mean of `phi` stays in
/// `[-1 + delta, 1 - delta]`.
pub fn mean_bound_delta(m0: f64, ell: f64, h_max: f64) -> Result<f64> {
    if !(ell > 0.0) {
        return Err(ChbError::Config(format!("ell must be positive, got {ell}")));
    }
    if !(h_max >= 0.0 && h_max / ell < 1.0) {
        return Err(ChbError::Config(format!(
            "source compatibility H/ell < 1 violated: H/ell = {}",
            h_max / ell
        )));
    }
    if !(m0.abs() < 1.0) {
        return Err(ChbError::Config(format!("initial mean must lie in (-1, 1), got {m0}")));
    }
    Ok(1.0 - m0.abs().max(h_max / ell))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::Regularization;
    use crate::grid::{gradient, laplacian_neumann};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(lambda: f64, chi: f64, ell: f64, reg: Regularization) -> ModelParams {
        ModelParams {
            chi,
            ell,
            lambda,
            p: 2.0,
            epsilon: 0.0,
            regularization: reg,
            q0: 3.0,
            penalty_exponent: None,
            q_monitor: 2.0,
        }
    }

    fn noise(g: GridSpec, amp: f64, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..g.num_cells()).map(|_| rng.gen_range(-amp..amp)).collect();
        ScalarField::from_values(g, v).unwrap()
    }

    #[test]
    fn uniform_state_follows_mass_ode() {
        let g = GridSpec::unit_square(8).unwrap();
        let mp = params(0.0, 0.0, 1.0, Regularization::ExactLog);
        let dt = 0.05;
        let solver = ChSolver::new(g, &mp, ChStepParams::new(dt)).unwrap();
        let mut phi = ScalarField::constant(g, 0.4);
        let sigma = ScalarField::zeros(g);
        let u = FaceField::zeros(g);
        let src = SourceSpec::zero();
        for _ in 0..10 {
            let m0 = phi.mean();
            let (next, _, _) = solver.step(&phi, &sigma, &u, &src, None).unwrap();
            assert!(next.max() - next.min() < 1e-14);
            let m1 = next.mean();
            assert!(((m1 - m0) / dt + m1).abs() < 1e-11);
            phi = next;
        }
    }

    #[test]
    fn converged_step_satisfies_both_equations() {
        let g = GridSpec::unit_square(16).unwrap();
        let mp = params(2.5, 0.7, 0.3, Regularization::ExactLog);
        let dt = 1e-3;
        let solver = ChSolver::new(g, &mp, ChStepParams::new(dt)).unwrap();
        let phi0 = noise(g, 0.5, 3);
        let sigma0 = noise(g, 0.5, 4).map(|v| v + 1.0);
        let u = FaceField::zeros(g);
        let src = SourceSpec::zero();
        let (phi1, mu1, rep) = solver.step(&phi0, &sigma0, &u, &src, None).unwrap();
        assert!(rep.newton_iterations > 0);
        // independent evaluation of the discrete equations with the public operators
        let lap_phi = laplacian_neumann(&phi1);
        let lap_mu = laplacian_neumann(&mu1);
        for k in 0..g.num_cells() {
            let p = phi1.values()[k];
            let mu = -lap_phi.values()[k] + crate::constitutive::beta(p).unwrap()
                - 2.5 * phi0.values()[k]
                - 0.7 * sigma0.values()[k];
            assert!((mu - mu1.values()[k]).abs() < 1e-9 * (1.0 + mu.abs()));
            let r1 = (p - phi0.values()[k]) / dt - lap_mu.values()[k] + 0.3 * p;
            assert!(dt * r1.abs() < 1e-9, "cell {k}: {r1}");
        }
        let m = rep.residual_history.len();
        assert!(rep.residual_history[m - 1] < rep.residual_history[0]);
    }

    #[test]
    fn convex_energy_is_nonincreasing() {
        let g = GridSpec::unit_square(24).unwrap();
        let mp = params(0.0, 0.0, 0.5, Regularization::ExactLog);
        let solver = ChSolver::new(g, &mp, ChStepParams::new(2e-4)).unwrap();
        let mut phi = noise(g, 0.05, 11);
        let sigma = ScalarField::zeros(g);
        let u = FaceField::zeros(g);
        let src = SourceSpec::zero();
        let energy = |phi: &ScalarField| {
            let gp = gradient(phi);
            0.5 * crate::grid::face_inner_product(&gp, &gp)
                + phi.map(|v| crate::constitutive::potential_big_f(v, 0.0).unwrap()).integral()
        };
        let mut e = energy(&phi);
        for _ in 0..200 {
            phi = solver.step(&phi, &sigma, &u, &src, None).unwrap().0;
            let e1 = energy(&phi);
            assert!(e1 <= e + 1e-14, "{e1} > {e}");
            e = e1;
        }
    }

    #[test]
    fn regularised_step_conserves_mass_and_converges() {
        let g = GridSpec::unit_square(16).unwrap();
        let mut mp = params(3.0, 0.0, 0.1, Regularization::BetaN { n: 8 });
        mp.q0 = 4.0;
        mp.penalty_exponent = Some(4.0);
        let dt = 5e-4;
        let solver = ChSolver::new(g, &mp, ChStepParams::new(dt)).unwrap();
        let mut phi = noise(g, 0.9, 5);
        let sigma = ScalarField::zeros(g);
        let u = FaceField::zeros(g);
        let src = SourceSpec::zero();
        for _ in 0..20 {
            let m0 = phi.mean();
            phi = solver.step(&phi, &sigma, &u, &src, None).unwrap().0;
            let m1 = phi.mean();
            assert!(((m1 - m0) / dt + 0.1 * m1).abs() < 1e-9);
        }
    }

    #[test]
    fn advection_guard_and_domain_errors() {
        let g = GridSpec::unit_square(8).unwrap();
        let mp = params(0.0, 0.0, 1.0, Regularization::ExactLog);
        let solver = ChSolver::new(g, &mp, ChStepParams::new(0.1)).unwrap();
        let sigma = ScalarField::zeros(g);
        let src = SourceSpec::zero();
        let u = FaceField::from_fns(g, |_, _| 1.0, |_, _| 0.0);
        let phi = ScalarField::constant(g, 0.1);
        assert!(matches!(
            solver.step(&phi, &sigma, &u, &src, None),
            Err(ChbError::StepGuard { .. })
        ));
        let phi = ScalarField::constant(g, 1.0);
        assert!(matches!(
            solver.step(&phi, &sigma, &FaceField::zeros(g), &src, None),
            Err(ChbError::Domain { .. })
        ));
    }

    #[test]
    fn mass_ode_converges_to_exponential() {
        let exact = 0.2 * (-1.0f64).exp();
        let mut errs = Vec::new();
        for steps in [100usize, 200, 400] {
            let dt = 1.0 / steps as f64;
            let m = mass_ode_reference(0.2, 1.0, &vec![0.0; steps], dt).unwrap();
            errs.push((m[steps] - exact).abs());
        }
        assert!((0.0735759 - exact).abs() < 1e-7);
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 2.0).abs() < 0.05, "{ratio}");
        }
    }

    #[test]
    fn mass_ode_steady_state_and_bound() {
        let m = mass_ode_reference_fn(-0.6, 2.0, |_| 0.8, 20.0, 0.01).unwrap();
        assert!((m.last().unwrap() - 0.4).abs() < 1e-12);
        let bound = 0.6f64.max(0.8 / 2.0);
        assert!(m.iter().all(|v| v.abs() <= bound + 1e-15));
        let hs: Vec<f64> = (0..500).map(|k| 0.5 * ((k as f64) * 0.37).sin()).collect();
        let m = mass_ode_reference(0.3, 1.0, &hs, 0.05).unwrap();
        let delta = mean_bound_delta(0.3, 1.0, 0.5).unwrap();
        assert!(m.iter().all(|v| v.abs() <= 1.0 - delta + 1e-15));
    }

    #[test]
    fn mean_bound_delta_values() {
        assert_eq!(mean_bound_delta(0.0, 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(mean_bound_delta(0.3, 2.0, 1.0).unwrap(), 0.5);
        assert!(mean_bound_delta(0.0, 1.0, 1.5).is_err());
        assert!(mean_bound_delta(1.0, 1.0, 0.0).is_err());
    }
}
