//! Energy, entropy, mass and norm audits of a run.

use serde::{Deserialize, Serialize};

use crate::constitutive::{gamma, gamma_hat, Potential, SourceSpec};
use crate::error::{ChbError, Result};
use crate::flow::symmetric_gradient_norm_sq;
use crate::grid::{face_inner_product, gradient, laplacian_neumann, FaceField, ScalarField};
use crate::model::ModelParams;
use crate::nutrient::{
    entropy_pair_report, entropy_potential, h_norm_sq, nutrient_dissipation, EntropyReport,
    MobilityFaceRule, FLOOR_EPS,
};

/// Exponents `(P0, S, R)` of the regularity statements for given `(p, q)`:
/// `P0 = min((18q - 6p)/(12 - 5p), 4)`, `S = min(6p/(12 - 5p), p)`,
/// `R = max(4, p/(p - 1))`.
pub fn theorem_exponents(p: f64, q: f64) -> (f64, f64, f64) {
    let d = 12.0 - 5.0 * p;
    let p0 = ((18.0 * q - 6.0 * p) / d).min(4.0);
    let s = (6.0 * p / d).min(p);
    let r = (p / (p - 1.0)).max(4.0);
    (p0, s, r)
}

fn grad_sq(f: &ScalarField) -> f64 {
    let g = gradient(f);
    face_inner_product(&g, &g)
}

/// `1/2 |grad phi|^2 + (1/2n) |lap phi|^2 + int F(phi) + int (gamma_hat(sigma) - chi sigma phi)`.
pub fn total_energy_with(phi: &ScalarField, sigma: &ScalarField, potential: &Potential, chi: f64, p: f64) -> Result<f64> {
    phi.check_grid(sigma)?;
    let nu = potential.inverse_index();
    let mut e = 0.5 * grad_sq(phi);
    if nu > 0.0 {
        e += 0.5 * nu * laplacian_neumann(phi).norm_sq();
    }
    e += phi.try_map(|v| potential.big_f(v))?.integral();
    let mut bulk = 0.0;
    for (&s, &f) in sigma.values().iter().zip(phi.values()) {
        bulk += gamma_hat(s, p)? - chi * s * f;
    }
    Ok(e + bulk * phi.grid().cell_volume())
}

/// [`total_energy_with`] building the potential from `mp`.
pub fn total_energy(phi: &ScalarField, sigma: &ScalarField, mp: &ModelParams) -> Result<f64> {
    let pot = Potential::new(mp.potential())?;
    total_energy_with(phi, sigma, &pot, mp.chi, mp.p)
}

/// Residual of the discrete identity obtained by testing the chemical
/// potential relation with `-lap phi`:
/// `|lap phi|^2 + nu |grad lap phi|^2 - [-<grad f(phi), grad phi> + <grad phi, grad mu> + chi <grad phi, grad sigma>]`.
/// `f'(phi) |grad phi|^2` is discretised as `grad f(phi) . grad phi`, which
/// makes the identity exact by summation by parts.
pub fn entropy_identity_residual_with(
    phi: &ScalarField,
    mu: &ScalarField,
    sigma: &ScalarField,
    potential: &Potential,
    chi: f64,
) -> Result<f64> {
    phi.check_grid(mu)?;
    phi.check_grid(sigma)?;
    let lap = laplacian_neumann(phi);
    let mut lhs = lap.norm_sq();
    let nu = potential.inverse_index();
    if nu > 0.0 {
        lhs += nu * grad_sq(&lap);
    }
    let gphi = gradient(phi);
    let gf = gradient(&phi.try_map(|v| potential.f(v))?);
    let rhs = -face_inner_product(&gf, &gphi)
        + face_inner_product(&gphi, &gradient(mu))
        + chi * face_inner_product(&gphi, &gradient(sigma));
    Ok(lhs - rhs)
}

pub fn entropy_identity_residual(phi: &ScalarField, mu: &ScalarField, sigma: &ScalarField, mp: &ModelParams) -> Result<f64> {
    let pot = Potential::new(mp.potential())?;
    entropy_identity_residual_with(phi, mu, sigma, &pot, mp.chi)
}

/// One row of the time series.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub energy: f64,
    /// `(E1 - E0)/dt + D - R`; NaN on the first row.
    pub energy_residual: f64,
    pub mass_phi: f64,
    pub mass_ode_ref: f64,
    pub mass_sigma: f64,
    pub min_sigma: f64,
    pub max_abs_phi: f64,
    pub grad_mu_sq: f64,
    pub u_sq: f64,
    pub eps_du_sq: f64,
    pub h_norm_sq: f64,
    pub nutrient_dissipation: f64,
    /// Source pairings `<h - ell phi, mu> + <b, gamma(sigma) - chi phi>`.
    pub source_power: f64,
    pub entropy: EntropyReport,
    pub lnsigma_l1: f64,
    pub grad_lnsigma_sq: f64,
    pub entropy_identity_residual: f64,
    pub phi_v_sq: f64,
    pub phi_h2_sq: f64,
    pub mu_v_sq: f64,
    pub lnsigma_v_sq: f64,
    pub div_u_max: f64,
    pub newton_iterations: usize,
    pub p0: f64,
    pub s_exp: f64,
    pub r_exp: f64,
}

/// Column order of the CSV time series. Columns are only ever appended.
pub const CSV_HEADER: &str = "step,t,dt,energy,energy_residual,mass_phi,mass_ode_ref,mass_sigma,\
min_sigma,max_abs_phi,grad_mu_sq,u_sq,eps_du_sq,h_norm_sq,nutrient_dissipation,source_power,\
gamma_hat_integral,sigma_p_integral,grad_sigma_p2_sq,lnsigma_l1,grad_lnsigma_sq,sigma_q_integral,\
grad_sigma_q2_sq,entropy_identity_residual,phi_v_sq,phi_h2_sq,mu_v_sq,lnsigma_v_sq,div_u_max,\
newton_iterations,P0,S,R";

impl DiagnosticsRecord {
    pub fn csv_row(&self) -> String {
        let e = &self.entropy;
        let reals = [
            self.t,
            self.dt,
            self.energy,
            self.energy_residual,
            self.mass_phi,
            self.mass_ode_ref,
            self.mass_sigma,
            self.min_sigma,
            self.max_abs_phi,
            self.grad_mu_sq,
            self.u_sq,
            self.eps_du_sq,
            self.h_norm_sq,
            self.nutrient_dissipation,
            self.source_power,
            e.gamma_hat_integral,
            e.sigma_p_integral,
            e.grad_sigma_p2_sq,
            self.lnsigma_l1,
            self.grad_lnsigma_sq,
            e.sigma_q_integral,
            e.grad_sigma_q2_sq,
            self.entropy_identity_residual,
            self.phi_v_sq,
            self.phi_h2_sq,
            self.mu_v_sq,
            self.lnsigma_v_sq,
            self.div_u_max,
        ];
        let mut row = self.step.to_string();
        for v in reals {
            row.push(',');
            row.push_str(&format!("{v:e}"));
        }
        row.push_str(&format!(
            ",{},{:e},{:e},{:e}",
            self.newton_iterations, self.p0, self.s_exp, self.r_exp
        ));
        row
    }

    /// Total dissipation `|grad mu|^2 + D_nutrient + eps |Du|^2 + |u|^2`.
    pub fn dissipation(&self) -> f64 {
        self.grad_mu_sq + self.nutrient_dissipation + self.eps_du_sq + self.u_sq
    }
}

/// `r = (E1 - E0)/dt + D1 - R`, where `source_power` is `R`.
pub fn energy_inequality_residual(prev: &DiagnosticsRecord, curr: &DiagnosticsRecord, dt: f64, source_power: f64) -> f64 {
    (curr.energy - prev.energy) / dt + curr.dissipation() - source_power
}

/// Everything needed to turn a state into a [`DiagnosticsRecord`].
#[derive(Clone)]
pub struct DiagnosticsContext {
    pub potential: Potential,
    pub mp: ModelParams,
    pub rule: MobilityFaceRule,
}

/// A consecutive pair of states and the velocity that advected between them.
pub struct StepView<'a> {
    pub phi: &'a ScalarField,
    pub mu: &'a ScalarField,
    pub sigma: &'a ScalarField,
    pub u: &'a FaceField,
    /// State at the start of the step (explicit source arguments); `None` on the first row.
    pub prev: Option<(&'a ScalarField, &'a ScalarField)>,
}

impl DiagnosticsContext {
    pub fn new(mp: &ModelParams, rule: MobilityFaceRule) -> Result<Self> {
        Ok(Self {
            potential: Potential::new(mp.potential())?,
            mp: *mp,
            rule,
        })
    }

    /// Source pairings in the time levels used by the steppers.
    pub fn source_power(&self, view: &StepView, src: &SourceSpec) -> Result<f64> {
        let Some((phi0, sigma0)) = view.prev else {
            return Ok(0.0);
        };
        let sens = self.mp.sensitivity();
        let w = entropy_potential(view.sigma, view.phi, &sens)?;
        let mut acc = 0.0;
        for k in 0..view.phi.values().len() {
            let (p0, s0) = (phi0.values()[k], sigma0.values()[k]);
            let (p1, s1) = (view.phi.values()[k], view.sigma.values()[k]);
            acc += (src.h(s0, p0) - self.mp.ell * p1) * view.mu.values()[k];
            acc += (src.b_plus(s0, p0) - s1 * src.b_minus(s0, p0)) * w.values()[k];
        }
        Ok(acc * view.phi.grid().cell_volume())
    }

    pub fn record(
        &self,
        step: usize,
        t: f64,
        dt: f64,
        view: &StepView,
        src: &SourceSpec,
        mass_ode_ref: f64,
    ) -> Result<DiagnosticsRecord> {
        let mp = &self.mp;
        let sens = mp.sensitivity();
        let (phi, mu, sigma) = (view.phi, view.mu, view.sigma);
        let min_sigma = sigma.min();
        if !(min_sigma >= 0.0) {
            return Err(ChbError::Invariant(format!("negative nutrient {min_sigma:e}")));
        }
        let lap = laplacian_neumann(phi);
        let gphi = grad_sq(phi);
        let entropy = entropy_pair_report(sigma, &sens, mp.q_monitor)?;
        let lns = sigma.map(|s| (s + FLOOR_EPS).ln());
        let u_sq = view.u.norm_sq();
        let (p0, s_exp, r_exp) = theorem_exponents(mp.p, mp.q_monitor);
        let positive = min_sigma > 0.0;
        let lnsigma_v_sq = if positive {
            lns.norm_sq() + grad_sq(&lns)
        } else {
            f64::INFINITY
        };
        Ok(DiagnosticsRecord {
            step,
            t,
            dt,
            energy: total_energy_with(phi, sigma, &self.potential, mp.chi, mp.p)?,
            energy_residual: f64::NAN,
            mass_phi: phi.mean(),
            mass_ode_ref,
            mass_sigma: sigma.mean(),
            min_sigma,
            max_abs_phi: phi.max_abs(),
            grad_mu_sq: grad_sq(mu),
            u_sq,
            eps_du_sq: if mp.epsilon > 0.0 {
                mp.epsilon * symmetric_gradient_norm_sq(view.u)
            } else {
                0.0
            },
            h_norm_sq: h_norm_sq(sigma, phi, &sens, self.rule)?,
            nutrient_dissipation: nutrient_dissipation(sigma, phi, &sens, self.rule)?,
            source_power: self.source_power(view, src)?,
            lnsigma_l1: entropy.ln_sigma_l1,
            grad_lnsigma_sq: entropy.grad_ln_sigma_sq,
            entropy,
            entropy_identity_residual: entropy_identity_residual_with(phi, mu, sigma, &self.potential, mp.chi)?,
            phi_v_sq: phi.norm_sq() + gphi,
            phi_h2_sq: phi.norm_sq() + lap.norm_sq() + gphi,
            mu_v_sq: mu.norm_sq() + grad_sq(mu),
            lnsigma_v_sq,
            div_u_max: crate::grid::divergence(view.u).max_abs(),
            newton_iterations: 0,
            p0,
            s_exp,
            r_exp,
        })
    }
}

/// Discrete time-space norms bounded by the regularity statements.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub p0: f64,
    pub s_exp: f64,
    pub r_exp: f64,
    pub phi_linf_v: f64,
    pub phi_lp0_h2: f64,
    pub mu_l2_v: f64,
    pub sigma_q2_l2_v: f64,
    pub sigma_linf_lq: f64,
    pub u_l2: f64,
    pub h_l2: f64,
    pub lnsigma_l2_v: f64,
}

/// Right-endpoint Riemann sums over the records after the first.
pub fn theorem_norm_report(history: &[DiagnosticsRecord], mp: &ModelParams) -> NormReport {
    let (p0, s_exp, r_exp) = theorem_exponents(mp.p, mp.q_monitor);
    let q = mp.q_monitor;
    let mut r = NormReport {
        p0,
        s_exp,
        r_exp,
        ..Default::default()
    };
    for rec in history {
        r.phi_linf_v = r.phi_linf_v.max(rec.phi_v_sq.sqrt());
        r.sigma_linf_lq = r.sigma_linf_lq.max(rec.entropy.sigma_q_integral.powf(1.0 / q));
    }
    for rec in history.iter().skip(1) {
        let dt = rec.dt;
        r.phi_lp0_h2 += dt * rec.phi_h2_sq.powf(0.5 * p0);
        r.mu_l2_v += dt * rec.mu_v_sq;
        r.sigma_q2_l2_v += dt * (rec.entropy.sigma_q_integral + rec.entropy.grad_sigma_q2_sq);
        r.u_l2 += dt * rec.u_sq;
        r.h_l2 += dt * rec.h_norm_sq;
        r.lnsigma_l2_v += dt * rec.lnsigma_v_sq;
    }
    r.phi_lp0_h2 = r.phi_lp0_h2.powf(1.0 / p0);
    for v in [
        &mut r.mu_l2_v,
        &mut r.sigma_q2_l2_v,
        &mut r.u_l2,
        &mut r.h_l2,
        &mut r.lnsigma_l2_v,
    ] {
        *v = v.sqrt();
    }
    r
}

/// Gronwall-type envelope `(e0 + c1 t) exp(c2 t)`.
pub fn gronwall_envelope(e0: f64, c1: f64, c2: f64, t: f64) -> f64 {
    (e0 + c1 * t) * (c2 * t).exp()
}

/// `gamma(sigma)` with the reporting offset, for external callers.
pub fn entropy_variable(sigma: f64, p: f64) -> Result<f64> {
    gamma(sigma.max(0.0) + FLOOR_EPS, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cahn_hilliard::{ChSolver, ChStepParams};
    use crate::constitutive::{potential_big_f, Regularization};
    use crate::grid::GridSpec;

    fn mp(chi: f64, lambda: f64, reg: Regularization) -> ModelParams {
        ModelParams {
            chi,
            ell: 1.0,
            lambda,
            p: 1.5,
            epsilon: 0.0,
            regularization: reg,
            q0: 3.0,
            penalty_exponent: None,
            q_monitor: 2.0,
        }
    }

    #[test]
    fn exponents_by_hand() {
        let close = |a: f64, b: f64| (a - b).abs() <= 4.0 * f64::EPSILON * b.abs();
        let (p0, s, r) = theorem_exponents(2.0, 2.0);
        assert!(close(p0, 4.0) && close(s, 2.0) && close(r, 4.0));
        let (p0, s, r) = theorem_exponents(1.2, 1.2);
        assert!(close(p0, 2.4) && close(s, 1.2) && close(r, 6.0), "{p0} {s} {r}");
        let (p0, s, r) = theorem_exponents(1.5, 2.0);
        assert!(close(p0, 4.0) && close(s, 1.5) && close(r, 4.0));
    }

    #[test]
    fn energy_reference_states() {
        let g = GridSpec::unit_square(8).unwrap();
        let one = ScalarField::constant(g, 1.0);
        let m = mp(0.7, 0.0, Regularization::ExactLog);
        assert_eq!(total_energy(&ScalarField::zeros(g), &one, &m).unwrap(), 0.0);
        let c = 0.4;
        let e = total_energy(&ScalarField::constant(g, c), &one, &m).unwrap();
        let expect = potential_big_f(c, 0.0).unwrap() - 0.7 * c;
        assert!((e - expect).abs() < 1e-14);
        assert!(total_energy(&ScalarField::constant(g, 1.0), &one, &m).is_err());
    }

    #[test]
    fn entropy_identity_is_exact_for_discrete_mu() {
        let g = GridSpec::unit_square(32).unwrap();
        for reg in [Regularization::ExactLog, Regularization::BetaN { n: 8 }] {
            let m = mp(0.8, 2.0, reg);
            let solver = ChSolver::new(g, &m, ChStepParams::new(1e-3)).unwrap();
            let phi = ScalarField::from_fn(g, |x, y| 0.6 * (3.0 * x).cos() * (2.0 * y).sin());
            let sigma = ScalarField::from_fn(g, |x, y| 1.0 + 0.3 * (x * y).sin());
            let mu = solver.chemical_potential(&phi, &phi, &sigma).unwrap();
            let r = entropy_identity_residual_with(&phi, &mu, &sigma, solver.potential(), 0.8).unwrap();
            let scale = laplacian_neumann(&phi).norm_sq();
            assert!(r.abs() < 1e-10 * scale, "{r} vs {scale}");
        }
    }

    #[test]
    fn entropy_identity_with_analytic_mu_is_second_order() {
        use std::f64::consts::PI;
        let m = mp(0.5, 1.0, Regularization::ExactLog);
        let mut res = Vec::new();
        for n in [16, 32, 64] {
            let g = GridSpec::unit_square(n).unwrap();
            let a = 0.5;
            let phi = ScalarField::from_fn(g, |x, y| a * (PI * x).cos() * (PI * y).cos());
            let sigma = ScalarField::from_fn(g, |x, y| 1.0 + 0.5 * (PI * x).cos() * (PI * y).cos());
            // mu = -lap phi + f(phi) - chi sigma evaluated analytically
            let mu = ScalarField::from_fn(g, |x, y| {
                let c = (PI * x).cos() * (PI * y).cos();
                let v = a * c;
                2.0 * PI * PI * v + crate::constitutive::beta(v).unwrap() - v - 0.5 * (1.0 + 0.5 * c)
            });
            res.push(entropy_identity_residual(&phi, &mu, &sigma, &m).unwrap().abs());
        }
        for w in res.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.7, "{res:?}");
        }
    }

    #[test]
    fn csv_row_matches_header() {
        let rec = DiagnosticsRecord::default();
        assert_eq!(rec.csv_row().split(',').count(), CSV_HEADER.split(',').count());
    }
}
