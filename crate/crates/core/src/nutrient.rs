//! Positivity-preserving step of the nutrient equation in entropy form,
//! `sigma_t + div(sigma u) = div(alpha(sigma) grad(gamma(sigma) - chi phi)) + b`.
//!
//! Since `alpha gamma' = 1`, the flux splits into linear diffusion
//! `grad sigma` (implicit) and the chemotactic part `-chi alpha grad phi`
//! (explicit, with a face mobility chosen by a rule). At faces the
//! diffusion part is written as `alpha_cr grad gamma` with the chain-rule
//! mean `alpha_cr = [sigma] / [gamma]`, which reproduces `grad sigma` exactly.

use serde::{Deserialize, Serialize};

use crate::constitutive::{alpha, gamma, gamma_hat, SensitivityParams, SourceSpec};
use crate::error::{ChbError, Result};
use crate::grid::{
    divergence, face_inner_product, gradient, laplacian_into, upwind_flux, FaceField, GridSpec,
    ScalarField,
};
use crate::krylov::cg;
use crate::model::ModelParams;
use crate::spectral::{Basis1d, Separable2d};

/// Offset inside logarithms used for reporting only.
pub const FLOOR_EPS: f64 = 1e-300;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityFaceRule {
    /// `alpha` of the cell the chemotactic flux leaves.
    #[default]
    UpwindByDrivingForce,
    HarmonicMean,
}

impl MobilityFaceRule {
    /// Bound on `alpha_face / sigma_donor`, used by the positivity guard.
    fn donor_factor(self) -> f64 {
        match self {
            MobilityFaceRule::UpwindByDrivingForce => 1.0,
            MobilityFaceRule::HarmonicMean => 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NutrientStepParams {
    pub dt: f64,
    /// Lower clamp applied after the solve; 0 leaves the scheme untouched.
    pub sigma_floor: f64,
    pub mobility_face_rule: MobilityFaceRule,
    pub krylov_tol: f64,
    pub krylov_max_iter: usize,
}

impl NutrientStepParams {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            sigma_floor: 0.0,
            mobility_face_rule: MobilityFaceRule::UpwindByDrivingForce,
            krylov_tol: 1e-13,
            krylov_max_iter: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ChbError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.sigma_floor >= 0.0) {
            return Err(ChbError::Config("sigma_floor must be >= 0".into()));
        }
        if !(self.krylov_tol > 0.0) || self.krylov_max_iter == 0 {
            return Err(ChbError::Config("invalid nutrient solver tolerances".into()));
        }
        Ok(())
    }
}

fn alpha_unchecked(s: f64, p: f64) -> f64 {
    alpha(s.max(0.0), p).unwrap_or(0.0)
}

/// Face mobility for the chemotactic flux `-chi alpha grad phi`.
pub fn face_mobility(sigma: &ScalarField, phi: &ScalarField, p: f64, rule: MobilityFaceRule) -> FaceField {
    let g = *sigma.grid();
    let a: Vec<f64> = sigma.values().iter().map(|&s| alpha_unchecked(s, p)).collect();
    let dphi = gradient(phi);
    let pick = |left: usize, right: usize, slope: f64| match rule {
        // mass flux chi alpha grad phi leaves the lower-phi cell
        MobilityFaceRule::UpwindByDrivingForce => {
            if slope >= 0.0 {
                a[left]
            } else {
                a[right]
            }
        }
        MobilityFaceRule::HarmonicMean => {
            let s = a[left] + a[right];
            if s > 0.0 {
                2.0 * a[left] * a[right] / s
            } else {
                0.0
            }
        }
    };
    let mut out = FaceField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let k = g.x_face(i, j);
            out.x_mut()[k] = pick(g.cell(i - 1, j), g.cell(i, j), dphi.x()[k]);
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let k = g.y_face(i, j);
            out.y_mut()[k] = pick(g.cell(i, j - 1), g.cell(i, j), dphi.y()[k]);
        }
    }
    out
}

/// Chain-rule mean `[sigma]/[gamma(sigma)]` on each face (`alpha(sigma)` when
/// the neighbours agree, 0 next to an empty cell).
pub fn chain_rule_mobility(sigma: &ScalarField, p: f64) -> Result<FaceField> {
    let g = *sigma.grid();
    let v = sigma.values();
    if let Some(&bad) = v.iter().find(|s| !(**s >= 0.0)) {
        return Err(ChbError::Domain {
            function: "chain-rule mobility",
            value: bad,
        });
    }
    let mean = |a: f64, b: f64| -> Result<f64> {
        if a == 0.0 || b == 0.0 {
            Ok(0.0)
        } else if a == b {
            alpha(a, p)
        } else {
            let dg = gamma(b, p)? - gamma(a, p)?;
            Ok(if dg != 0.0 { (b - a) / dg } else { alpha(a, p)? })
        }
    };
    let mut out = FaceField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            out.x_mut()[g.x_face(i, j)] = mean(v[g.cell(i - 1, j)], v[g.cell(i, j)])?;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            out.y_mut()[g.y_face(i, j)] = mean(v[g.cell(i, j - 1)], v[g.cell(i, j)])?;
        }
    }
    Ok(out)
}

/// `-chi alpha_face grad phi`.
pub fn chemotactic_flux(sigma: &ScalarField, phi: &ScalarField, sp: &SensitivityParams, rule: MobilityFaceRule) -> FaceField {
    let mut f = face_mobility(sigma, phi, sp.p, rule).mul(&gradient(phi));
    f.scale(-sp.chi);
    f
}

/// Entropy-form flux `alpha grad(gamma(sigma) - chi phi)`: chain-rule mean
/// on the diffusion part, rule-based mobility on the chemotactic part.
/// Faces next to an empty cell carry the limit `[sigma]/h` in the diffusion part.
pub fn cross_flux(sigma: &ScalarField, phi: &ScalarField, sp: &SensitivityParams, rule: MobilityFaceRule) -> Result<FaceField> {
    sigma.check_grid(phi)?;
    let g = *sigma.grid();
    let v = sigma.values();
    let acr = chain_rule_mobility(sigma, sp.p)?;
    let gam = |s: f64| if s > 0.0 { gamma(s, sp.p).unwrap_or(0.0) } else { 0.0 };
    let (rhx, rhy) = (1.0 / g.hx(), 1.0 / g.hy());
    let mut f = chemotactic_flux(sigma, phi, sp, rule);
    let diff = |a: f64, b: f64, rh: f64, w: f64| {
        if a == 0.0 || b == 0.0 {
            (b - a) * rh
        } else {
            w * (gam(b) - gam(a)) * rh
        }
    };
    for j in 0..g.ny {
        for i in 1..g.nx {
            let k = g.x_face(i, j);
            let d = diff(v[g.cell(i - 1, j)], v[g.cell(i, j)], rhx, acr.x()[k]);
            f.x_mut()[k] += d;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let k = g.y_face(i, j);
            let d = diff(v[g.cell(i, j - 1)], v[g.cell(i, j)], rhy, acr.y()[k]);
            f.y_mut()[k] += d;
        }
    }
    Ok(f)
}

/// Largest `dt` for which the explicit part of [`sigma_step`] keeps a
/// nonnegative right-hand side: each cell may lose at most its content
/// through its outflow faces (advective and chemotactic).
pub fn positivity_dt_limit(phi: &ScalarField, u: &FaceField, chi: f64, rule: MobilityFaceRule) -> f64 {
    let g = *phi.grid();
    let dphi = gradient(phi);
    let kappa = rule.donor_factor();
    let (rhx, rhy) = (1.0 / g.hx(), 1.0 / g.hy());
    let mut rate = vec![0.0; g.num_cells()];
    let mut face = |left: usize, right: usize, w: f64, slope: f64, rh: f64| {
        let adv = w.abs() * rh;
        if w > 0.0 {
            rate[left] += adv;
        } else {
            rate[right] += adv;
        }
        let chem = kappa * chi * slope.abs() * rh;
        if slope >= 0.0 {
            rate[left] += chem;
        } else {
            rate[right] += chem;
        }
    };
    for j in 0..g.ny {
        for i in 1..g.nx {
            let k = g.x_face(i, j);
            face(g.cell(i - 1, j), g.cell(i, j), u.x()[k], dphi.x()[k], rhx);
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let k = g.y_face(i, j);
            face(g.cell(i, j - 1), g.cell(i, j), u.y()[k], dphi.y()[k], rhy);
        }
    }
    let worst = rate.iter().fold(0.0f64, |m, &r| m.max(r));
    if worst > 0.0 {
        1.0 / worst
    } else {
        f64::INFINITY
    }
}

/// Reusable nutrient stepper holding the spectral preconditioner.
#[derive(Clone)]
pub struct NutrientSolver {
    grid: GridSpec,
    mp: ModelParams,
    params: NutrientStepParams,
    basis: Separable2d,
}

impl NutrientSolver {
    pub fn new(grid: GridSpec, mp: &ModelParams, params: NutrientStepParams) -> Result<Self> {
        grid.validate()?;
        params.validate()?;
        mp.sensitivity().validate()?;
        let basis = Separable2d::new(
            Basis1d::cosine(grid.nx, grid.hx()),
            Basis1d::cosine(grid.ny, grid.hy()),
        );
        Ok(Self {
            grid,
            mp: *mp,
            params,
            basis,
        })
    }

    pub fn params(&self) -> &NutrientStepParams {
        &self.params
    }

    pub fn set_dt(&mut self, dt: f64) {
        self.params.dt = dt;
    }

    /// `(1/dt + b-) sigma1 - lap sigma1 =
    ///   sigma0/dt - div(sigma0_up u) - chi div(alpha_face grad phi0) + b+ [+ forcing]`.
    pub fn step(
        &self,
        sigma0: &ScalarField,
        phi0: &ScalarField,
        u: &FaceField,
        src: &SourceSpec,
        forcing: Option<&ScalarField>,
    ) -> Result<ScalarField> {
        let g = self.grid;
        if *sigma0.grid() != g || *phi0.grid() != g || *u.grid() != g {
            return Err(ChbError::GridMismatch);
        }
        if let Some(&bad) = sigma0.values().iter().find(|s| !(**s >= 0.0)) {
            return Err(ChbError::Domain {
                function: "nutrient step",
                value: bad,
            });
        }
        let dt = self.params.dt;
        let chi = self.mp.chi;
        let rule = self.params.mobility_face_rule;
        let limit = positivity_dt_limit(phi0, u, chi, rule);
        if dt > limit {
            return Err(ChbError::StepGuard {
                guard: "nutrient positivity",
                dt,
                limit,
            });
        }
        let n = g.num_cells();
        let sens = self.mp.sensitivity();
        let mut flux = upwind_flux(sigma0, u);
        flux.axpy(-1.0, &chemotactic_flux(sigma0, phi0, &sens, rule));
        let out = divergence(&flux);
        let mut rhs = vec![0.0; n];
        let mut decay = vec![0.0; n];
        let mut forced = false;
        for k in 0..n {
            let (s, p) = (sigma0.values()[k], phi0.values()[k]);
            let bp = src.b_plus(s, p);
            let bm = src.b_minus(s, p);
            if !(bp >= 0.0 && bm >= 0.0) {
                return Err(ChbError::Invariant(format!(
                    "source split must be nonnegative, got b+ = {bp}, b- = {bm}"
                )));
            }
            decay[k] = 1.0 / dt + bm;
            let explicit = s / dt - out.values()[k];
            // the guard makes `explicit` nonnegative up to rounding
            let explicit = if explicit < 0.0 && explicit > -64.0 * f64::EPSILON * (s / dt) {
                0.0
            } else {
                explicit
            };
            rhs[k] = explicit + bp;
            if let Some(f) = forcing {
                rhs[k] += f.values()[k];
                forced = true;
            }
        }
        if !forced {
            if let Some(k) = rhs.iter().position(|v| *v < 0.0) {
                return Err(ChbError::Invariant(format!(
                    "negative explicit nutrient update {:e} in cell {k}",
                    rhs[k]
                )));
            }
        }

        let dbar = decay.iter().sum::<f64>() / n as f64;
        let mut lap = vec![0.0; n];
        let apply = |v: &[f64], o: &mut [f64]| {
            laplacian_into(&g, v, &mut lap);
            for k in 0..n {
                o[k] = decay[k] * v[k] - lap[k];
            }
        };
        let precond = |v: &[f64], o: &mut [f64]| {
            o.copy_from_slice(v);
            self.basis.apply_symbol(o, |lx, ly| 1.0 / (dbar + lx + ly));
        };
        let mut x: Vec<f64> = sigma0.values().to_vec();
        cg(apply, precond, &rhs, &mut x, self.params.krylov_tol, self.params.krylov_max_iter)?;
        if !forced {
            // One Jacobi sweep from the clipped iterate. The operator is an
            // M-matrix, so the sweep only adds nonnegative terms and is a
            // contraction towards the exact solution.
            x.iter_mut().for_each(|v| *v = v.max(0.0));
            x = self.jacobi_sweep(&x, &decay, &rhs);
        }
        let floor = self.params.sigma_floor;
        if floor > 0.0 {
            x.iter_mut().for_each(|v| *v = v.max(floor));
        }
        if !forced {
            if let Some(k) = x.iter().position(|v| !(*v >= 0.0)) {
                return Err(ChbError::Invariant(format!(
                    "negative nutrient {:e} in cell {k}",
                    x[k]
                )));
            }
        }
        ScalarField::from_values(g, x)
    }

    fn jacobi_sweep(&self, x: &[f64], decay: &[f64], rhs: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let (wx, wy) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
        let mut out = vec![0.0; x.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = g.cell(i, j);
                let (mut diag, mut off) = (decay[c], 0.0);
                if i > 0 {
                    diag += wx;
                    off += wx * x[c - 1];
                }
                if i + 1 < g.nx {
                    diag += wx;
                    off += wx * x[c + 1];
                }
                if j > 0 {
                    diag += wy;
                    off += wy * x[c - g.nx];
                }
                if j + 1 < g.ny {
                    diag += wy;
                    off += wy * x[c + g.nx];
                }
                out[c] = (rhs[c] + off) / diag;
            }
        }
        out
    }
}

/// One step with a freshly built solver; see [`NutrientSolver::step`].
pub fn sigma_step(
    sigma: &ScalarField,
    phi: &ScalarField,
    u: &FaceField,
    src: &SourceSpec,
    mp: &ModelParams,
    sp: &NutrientStepParams,
) -> Result<ScalarField> {
    NutrientSolver::new(*sigma.grid(), mp, *sp)?.step(sigma, phi, u, src, None)
}

/// Entropy quantities of a nutrient field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    /// `int gamma_hat(sigma)`.
    pub gamma_hat_integral: f64,
    /// `int sigma^p`.
    pub sigma_p_integral: f64,
    /// `|grad sigma^(p/2)|^2`.
    pub grad_sigma_p2_sq: f64,
    /// `|grad ln(sigma + eps)|^2`.
    pub grad_ln_sigma_sq: f64,
    /// `int |ln sigma|` over cells with `sigma > 0`.
    pub ln_sigma_l1: f64,
    pub q: f64,
    /// `int sigma^q`.
    pub sigma_q_integral: f64,
    /// `|grad sigma^(q/2)|^2`.
    pub grad_sigma_q2_sq: f64,
}

pub fn entropy_pair_report(sigma: &ScalarField, sp: &SensitivityParams, q: f64) -> Result<EntropyReport> {
    if let Some(&bad) = sigma.values().iter().find(|s| !(**s >= 0.0)) {
        return Err(ChbError::Domain {
            function: "entropy report",
            value: bad,
        });
    }
    let p = sp.p;
    let grad_sq = |f: ScalarField| {
        let gf = gradient(&f);
        face_inner_product(&gf, &gf)
    };
    Ok(EntropyReport {
        gamma_hat_integral: sigma.try_map(|s| gamma_hat(s, p))?.integral(),
        sigma_p_integral: sigma.map(|s| s.powf(p)).integral(),
        grad_sigma_p2_sq: grad_sq(sigma.map(|s| s.powf(0.5 * p))),
        grad_ln_sigma_sq: grad_sq(sigma.map(|s| (s + FLOOR_EPS).ln())),
        ln_sigma_l1: sigma.map(|s| if s > 0.0 { s.ln().abs() } else { 0.0 }).integral(),
        q,
        sigma_q_integral: sigma.map(|s| s.powf(q)).integral(),
        grad_sigma_q2_sq: grad_sq(sigma.map(|s| s.powf(0.5 * q))),
    })
}

/// `|alpha_face^(1/2) grad(gamma(sigma) - chi phi)|^2` with the rule mobility.
pub fn h_norm_sq(sigma: &ScalarField, phi: &ScalarField, sp: &SensitivityParams, rule: MobilityFaceRule) -> Result<f64> {
    let pot = entropy_potential(sigma, phi, sp)?;
    let d = gradient(&pot);
    let a = face_mobility(sigma, phi, sp.p, rule);
    let w = a.mul(&d);
    Ok(face_inner_product(&w, &d))
}

/// `gamma(sigma) - chi phi` with `sigma` offset by [`FLOOR_EPS`].
pub fn entropy_potential(sigma: &ScalarField, phi: &ScalarField, sp: &SensitivityParams) -> Result<ScalarField> {
    sigma.check_grid(phi)?;
    let gam = sigma.try_map(|s| gamma(s.max(0.0) + FLOOR_EPS, sp.p))?;
    gam.zip_map(phi, |g, f| g - sp.chi * f)
}

/// Dissipation rate of the semi-discrete scheme,
/// `<grad sigma - chi alpha_face grad phi, grad(gamma(sigma) - chi phi)>`.
/// It equals `|alpha^(1/2) grad(gamma - chi phi)|^2` in the continuum.
pub fn nutrient_dissipation(sigma: &ScalarField, phi: &ScalarField, sp: &SensitivityParams, rule: MobilityFaceRule) -> Result<f64> {
    let f = cross_flux(sigma, phi, sp, rule)?;
    let d = gradient(&entropy_potential(sigma, phi, sp)?);
    Ok(face_inner_product(&f, &d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::{builtin_sources, Regularization, SourceConstants};
    use crate::grid::laplacian_neumann;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mp(chi: f64, p: f64) -> ModelParams {
        ModelParams {
            chi,
            ell: 1.0,
            lambda: 0.0,
            p,
            epsilon: 0.0,
            regularization: Regularization::ExactLog,
            q0: 3.0,
            penalty_exponent: None,
            q_monitor: 2.0,
        }
    }

    #[test]
    fn uniform_unit_state_has_zero_flux() {
        let g = GridSpec::unit_square(8).unwrap();
        let s = ScalarField::constant(g, 1.0);
        let phi = ScalarField::constant(g, 0.3);
        let sp = SensitivityParams::new(1.5, 2.0).unwrap();
        for rule in [MobilityFaceRule::UpwindByDrivingForce, MobilityFaceRule::HarmonicMean] {
            assert_eq!(cross_flux(&s, &phi, &sp, rule).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn chain_rule_flux_reproduces_gradient() {
        let g = GridSpec::unit_square(32).unwrap();
        let s = ScalarField::from_fn(g, |x, y| 1.0 + 0.7 * (3.0 * x).cos() * (2.0 * y).sin());
        let phi = ScalarField::from_fn(g, |x, _| x);
        for p in [1.2, 1.5, 2.0] {
            let sp = SensitivityParams::new(p, 0.0).unwrap();
            let f = cross_flux(&s, &phi, &sp, MobilityFaceRule::HarmonicMean).unwrap();
            let gs = gradient(&s);
            for (a, b) in f.x().iter().chain(f.y()).zip(gs.x().iter().chain(gs.y())) {
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-12), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn empty_donor_cell_blocks_chemotaxis() {
        let g = GridSpec::unit_square(6).unwrap();
        let mut s = ScalarField::constant(g, 0.5);
        s.values_mut()[g.cell(2, 2)] = 0.0;
        let phi = ScalarField::from_fn(g, |x, y| x + y);
        let sp = SensitivityParams::new(1.5, 1.0).unwrap();
        let f = chemotactic_flux(&s, &phi, &sp, MobilityFaceRule::UpwindByDrivingForce);
        // phi increases with x and y, so the empty cell donates across its right and top faces
        assert_eq!(f.x_at(3, 2), 0.0);
        assert_eq!(f.y_at(2, 3), 0.0);
        assert!(f.x_at(2, 2) != 0.0);
    }

    #[test]
    fn steady_and_decaying_uniform_states() {
        let g = GridSpec::unit_square(8).unwrap();
        let m = mp(1.0, 1.5);
        let phi = ScalarField::constant(g, 0.2);
        let u = FaceField::zeros(g);
        let one = ScalarField::constant(g, 1.0);
        let s1 = sigma_step(&one, &phi, &u, &SourceSpec::zero(), &m, &NutrientStepParams::new(0.1)).unwrap();
        assert!(s1.values().iter().all(|v| (v - 1.0).abs() < 1e-14));

        let src = builtin_sources("linear_b", SourceConstants { h_max: 0.0, b0: 1.0, b_inf: 1.0 }, 1.0).unwrap();
        let exact = 1.0 - 0.5 * (-1.0f64).exp();
        assert!((exact - 0.8160603).abs() < 1e-7);
        let mut errs = Vec::new();
        for steps in [50usize, 100, 200] {
            let sp = NutrientStepParams::new(1.0 / steps as f64);
            let solver = NutrientSolver::new(g, &m, sp).unwrap();
            let mut s = ScalarField::constant(g, 0.5);
            for _ in 0..steps {
                s = solver.step(&s, &phi, &u, &src, None).unwrap();
            }
            assert!(s.max() - s.min() < 1e-12);
            errs.push((s.mean() - exact).abs());
        }
        assert!(errs[0] / errs[1] > 1.9 && errs[1] / errs[2] > 1.9);
    }

    #[test]
    fn zero_chi_is_the_implicit_heat_step() {
        let g = GridSpec::unit_square(16).unwrap();
        let m = mp(0.0, 1.3);
        let dt = 1e-3;
        let s0 = ScalarField::from_fn(g, |x, y| 1.0 + (x * 5.0).sin() * y);
        let phi = ScalarField::from_fn(g, |x, y| (x - y).sin());
        let s1 = sigma_step(&s0, &phi, &FaceField::zeros(g), &SourceSpec::zero(), &m, &NutrientStepParams::new(dt)).unwrap();
        let lap = laplacian_neumann(&s1);
        for k in 0..g.num_cells() {
            let r = s1.values()[k] - dt * lap.values()[k] - s0.values()[k];
            assert!(r.abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn positivity_and_conservation_under_rough_chemotaxis() {
        let g = GridSpec::unit_square(24).unwrap();
        let m = mp(1.0, 1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phi = ScalarField::from_values(g, (0..g.num_cells()).map(|_| rng.gen_range(-0.9..0.9)).collect()).unwrap();
        let mut s = ScalarField::from_fn(g, |x, y| {
            let r2 = (x - 0.5).powi(2) + (y - 0.5).powi(2);
            (1.0 - r2 / 0.09).max(0.0)
        });
        let u = FaceField::zeros(g);
        for rule in [MobilityFaceRule::UpwindByDrivingForce, MobilityFaceRule::HarmonicMean] {
            let limit = positivity_dt_limit(&phi, &u, 1.0, rule);
            let mut sp = NutrientStepParams::new(limit);
            sp.mobility_face_rule = rule;
            let solver = NutrientSolver::new(g, &m, sp).unwrap();
            for _ in 0..50 {
                let m0 = s.integral();
                s = solver.step(&s, &phi, &u, &SourceSpec::zero(), None).unwrap();
                assert!(s.min() >= 0.0);
                assert!((s.integral() - m0).abs() <= 1e-11 * m0);
            }
            sp.dt = 1.01 * limit;
            let solver = NutrientSolver::new(g, &m, sp).unwrap();
            assert!(matches!(
                solver.step(&s, &phi, &u, &SourceSpec::zero(), None),
                Err(ChbError::StepGuard { .. })
            ));
        }
    }

    #[test]
    fn entropy_report_reference_values() {
        let g = GridSpec::unit_square(16).unwrap();
        let sp = SensitivityParams::new(2.0, 1.0).unwrap();
        let r = entropy_pair_report(&ScalarField::constant(g, 1.0), &sp, 2.0).unwrap();
        assert!(r.gamma_hat_integral.abs() < 1e-15);
        assert!((r.sigma_p_integral - 1.0).abs() < 1e-15);
        assert_eq!(r.grad_sigma_p2_sq, 0.0);
        assert_eq!(r.ln_sigma_l1, 0.0);
        let s = ScalarField::from_fn(g, |x, _| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).cos());
        let r = entropy_pair_report(&s, &sp, 2.0).unwrap();
        assert!((r.sigma_p_integral - 1.125).abs() < 1e-14);
    }
}
