//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails. Built with `harness = false`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use chb_core::cahn_hilliard::{mass_ode_reference, mean_bound_delta};
use chb_core::constitutive::{alpha, beta_n, gamma, gamma_hat, PotentialParams};
use chb_core::diagnostics::theorem_exponents;
use chb_core::flow::{korteweg_force, symmetric_gradient_norm_sq, FlowSolveParams, FlowSolver};
use chb_core::grid::{divergence, face_inner_product, gradient, inner_product, laplacian_neumann};
use chb_core::sim::{darcy_sweep, n_sweep, run_mms, ExperimentConfig, MmsConfig, SimConfig, Simulation};
use chb_core::{FaceField, GridSpec, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = chb_core::Result<(bool, String)>;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn load(name: &str) -> SimConfig {
    SimConfig::load(&configs_dir().join(name)).expect("bundled config")
}

/// Single-phase run with no flow; individual tests override what they need.
fn base_config(n: usize) -> SimConfig {
    let text = format!(
        r#"
[grid]
nx = {n}
ny = {n}
lx = 1.0
ly = 1.0

[model]
chi = 0.0
ell = 1.0
lambda = 0.0
p = 1.5
epsilon = 0.0
regularization = "exact_log"
q0 = 4.0
q_monitor = 2.0

[sources]
h = "zero"
b = "zero"

[initial.phi]
kind = "cosine"
mean = 0.1
amplitude = 0.5
kx = 1
ky = 1

[initial.sigma]
kind = "cosine"
mean = 1.0
amplitude = 0.5
kx = 2
ky = 1

[time]
dt = 1e-4
t_end = 0.05

[output]
dir = "unused"
"#
    );
    SimConfig::from_toml_str(&text).expect("test config")
}

fn random_cells(g: GridSpec, rng: &mut ChaCha8Rng) -> ScalarField {
    ScalarField::from_values(g, (0..g.num_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn random_faces(g: GridSpec, rng: &mut ChaCha8Rng) -> FaceField {
    let mut f = FaceField::zeros(g);
    f.x_mut().iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    f.y_mut().iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    f.zero_boundary_normal();
    f
}

/// Five-point Neumann Laplacian written out directly (ghost value = interior value).
fn five_point(f: &ScalarField) -> Vec<f64> {
    let g = *f.grid();
    let (ix, iy) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
    let mut out = vec![0.0; g.num_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = f.at(i, j);
            let w = if i > 0 { f.at(i - 1, j) } else { c };
            let e = if i + 1 < g.nx { f.at(i + 1, j) } else { c };
            let s = if j > 0 { f.at(i, j - 1) } else { c };
            let n = if j + 1 < g.ny { f.at(i, j + 1) } else { c };
            out[g.cell(i, j)] = (w - 2.0 * c + e) * ix + (s - 2.0 * c + n) * iy;
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let g = GridSpec::unit_square(64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = [0.0f64; 4];
    for _ in 0..10 {
        let v = random_cells(g, &mut rng);
        let f = random_faces(g, &mut rng);
        let a = inner_product(&divergence(&f), &v)?;
        let b = face_inner_product(&f, &gradient(&v));
        worst[0] = worst[0].max((a + b).abs() / b.abs().max(1.0));

        let lap = laplacian_neumann(&v);
        let direct = five_point(&v);
        let scale = direct.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let diff = lap.values().iter().zip(&direct).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        worst[1] = worst[1].max(diff / scale);

        worst[2] = worst[2].max(inner_product(&lap, &v)?);
        let abs_sum: f64 = lap.values().iter().map(|x| x.abs()).sum();
        worst[3] = worst[3].max(lap.values().iter().sum::<f64>().abs() / abs_sum);
    }
    let pass = worst[0] <= 1e-12 && worst[1] <= 1e-12 && worst[2] <= 0.0 && worst[3] <= 1e-12;
    Ok((
        pass,
        format!(
            "adjoint {:.1e}, div grad vs 5-point {:.1e}, max <lap f, f> {:.3e}, |sum lap f| {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    ))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for p in [1.2, 1.5, 2.0] {
        for k in 0..40 {
            // log-spaced in [1e-2, 1e2]
            let s = 10f64.powf(-2.0 + 4.0 * k as f64 / 39.0);
            let h = 1e-4 * s;
            let dg = (gamma(s + h, p)? - gamma(s - h, p)?) / (2.0 * h);
            worst = worst.max((alpha(s, p)? * dg - 1.0).abs());
            count += 1;
        }
    }
    let mut roots = true;
    for p in [1.2, 1.5, 2.0] {
        roots &= gamma(1.0, p)? == 0.0 && gamma_hat(1.0, p)? == 0.0;
    }
    let mut monotone = true;
    let mut zero = true;
    for n in 1..=32 {
        let prm = PotentialParams::regularized(2.0, n, 4.0);
        zero &= beta_n(0.0, &prm)? == 0.0;
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=600 {
            let v = beta_n(-3.0 + 0.01 * k as f64, &prm)?;
            monotone &= v > prev;
            prev = v;
        }
    }
    Ok((
        worst <= 1e-6 && roots && monotone && zero,
        format!(
            "max |alpha gamma' - 1| = {worst:.1e} at {count} points; gamma(1) = gamma_hat(1) = 0: {roots}; \
             beta_n increasing: {monotone}, beta_n(0) = 0: {zero}"
        ),
    ))
}

fn run_recording(cfg: &SimConfig, mut each: impl FnMut(&Simulation)) -> chb_core::Result<Simulation> {
    let mut sim = Simulation::new(cfg)?;
    each(&sim);
    sim.run_to_end(|s| {
        each(s);
        Ok(())
    })?;
    Ok(sim)
}

/// `m' + ell m = hbar(t)` integrated exactly for piecewise-linear `hbar`.
fn exact_mass(m0: f64, ell: f64, times: &[f64], hbar: &[f64]) -> f64 {
    let mut m = m0;
    for k in 0..times.len() - 1 {
        let (t0, t1) = (times[k], times[k + 1]);
        let dt = t1 - t0;
        let (h0, slope) = (hbar[k], (hbar[k + 1] - hbar[k]) / dt);
        let e = (-ell * dt).exp();
        // particular solution of m' + ell m = h0 + slope (t - t0)
        let part = |tau: f64| (h0 + slope * tau) / ell - slope / (ell * ell);
        m = part(dt) + (m - part(0.0)) * e;
    }
    m
}

fn criterion_3() -> Outcome {
    // mean-only source: h = H, so the reference needs nothing from the simulation
    let h_max = 0.6;
    let mut cfg = base_config(32);
    cfg.sources.h = "constant_h".into();
    cfg.sources.constants.h_max = h_max;
    cfg.time.dt = 1e-3;
    cfg.time.t_end = 1.0;
    let mut means = Vec::new();
    let sim = run_recording(&cfg, |s| means.push(s.phi.mean()))?;
    let m0 = means[0];
    let reference = mass_ode_reference(m0, cfg.model.ell, &vec![h_max; sim.step], cfg.time.dt)?;
    let exact_err = means.iter().zip(&reference).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let delta = mean_bound_delta(m0, cfg.model.ell, h_max)?;
    let mut inside = means.iter().all(|m| m.abs() <= 1.0 - delta);

    // state-dependent source: first order in dt against the continuous balance
    let mut errs = Vec::new();
    for dt in [2e-3, 1e-3] {
        let mut cfg = base_config(32);
        cfg.sources.h = "logistic_h_saturating".into();
        cfg.sources.b = "logistic_b".into();
        cfg.sources.constants.h_max = 0.8;
        cfg.sources.constants.b0 = 1.0;
        cfg.sources.constants.b_inf = 1.0;
        cfg.time.dt = dt;
        cfg.time.t_end = 1.0;
        let mut times = Vec::new();
        let mut hbar = Vec::new();
        let mut means = Vec::new();
        let sim = run_recording(&cfg, |s| {
            times.push(s.t);
            means.push(s.phi.mean());
            let src = s.sources();
            let h: f64 = s.phi.values().iter().zip(s.sigma.values()).map(|(&p, &q)| src.h(q, p)).sum();
            hbar.push(h / s.phi.values().len() as f64);
        })?;
        let delta = mean_bound_delta(means[0], cfg.model.ell, 0.8)?;
        inside &= means.iter().all(|m| m.abs() <= 1.0 - delta);
        errs.push((sim.phi.mean() - exact_mass(means[0], cfg.model.ell, &times, &hbar)).abs());
    }
    let ratio = errs[0] / errs[1];
    Ok((
        exact_err <= 1e-9 && (1.6..=2.4).contains(&ratio) && inside,
        format!(
            "constant h: max |m - m_ode| = {exact_err:.1e} over {} steps; logistic h: error {:.2e} -> {:.2e} \
             (ratio {ratio:.2}); mean inside [-1+delta, 1-delta]: {inside}",
            sim.step, errs[0], errs[1]
        ),
    ))
}

fn criterion_4() -> Outcome {
    let mut cfg = base_config(32);
    cfg.model.chi = 1.0;
    cfg.model.lambda = 2.0;
    cfg.flow.enabled = true;
    cfg.model.epsilon = 0.01;
    cfg.time.dt = 1e-4;
    cfg.time.t_end = 0.1;
    let g = cfg.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let phi = ScalarField::from_values(g, (0..g.num_cells()).map(|_| rng.gen_range(-0.95..0.95)).collect())?;
    // vanishes outside a disc, so ln sigma is not integrable
    let sigma = ScalarField::from_fn(g, |x, y| {
        let r2 = (x - 0.4).powi(2) + (y - 0.6).powi(2);
        2.0 * (1.0 - r2 / 0.09).max(0.0)
    });
    let mut sim = Simulation::from_state(&cfg, phi, sigma)?;
    let mut min = sim.sigma.min();
    sim.run_to_end(|s| {
        min = min.min(s.sigma.min());
        Ok(())
    })?;
    Ok((
        min >= 0.0 && sim.step >= 1000,
        format!("min sigma over {} steps = {min:e} ({} halvings)", sim.step, sim.halvings),
    ))
}

fn mean_residual(cfg: &SimConfig) -> chb_core::Result<f64> {
    let sim = run_recording(cfg, |_| {})?;
    let r = &sim.records()[1..];
    Ok(r.iter().map(|x| x.energy_residual.abs()).sum::<f64>() / r.len() as f64)
}

fn criterion_5() -> Outcome {
    let mut cfg = base_config(64);
    cfg.time.dt = 1e-4;
    cfg.time.t_end = 0.05;
    let mut energies = Vec::new();
    run_recording(&cfg, |s| energies.push(s.last_record().energy))?;
    let decreasing = energies.windows(2).all(|w| w[1] < w[0]);
    let steps = energies.len() - 1;

    let mut cfg = base_config(64);
    cfg.model.chi = 1.0;
    cfg.model.lambda = 1.0;
    cfg.time.t_end = 0.01;
    cfg.time.dt = 2e-4;
    let coarse = mean_residual(&cfg)?;
    cfg.time.dt = 1e-4;
    let fine = mean_residual(&cfg)?;
    let ratio = coarse / fine;
    Ok((
        decreasing && steps >= 500 && (1.7..=2.3).contains(&ratio),
        format!(
            "strictly decreasing over {steps} steps: {decreasing}; mean |residual| {coarse:.3e} -> {fine:.3e} \
             (ratio {ratio:.2})"
        ),
    ))
}

fn criterion_6() -> Outcome {
    let cfg = load("n_sweep.toml");
    let Some(ExperimentConfig::NSweep { n_list, .. }) = &cfg.experiment else {
        panic!("n_sweep.toml must declare the n sweep");
    };
    let t = n_sweep(&cfg, n_list, true)?;
    let sups: Vec<String> = t
        .rows
        .iter()
        .map(|r| format!("{}: {:.4}", r.n.map_or("exact".into(), |n| n.to_string()), r.sup_abs_phi))
        .collect();
    Ok((
        t.complete && t.uniform_bound && t.exact_inside == Some(true),
        format!("sup max|phi| {}; spread {:.3}", sups.join(", "), t.spread),
    ))
}

fn criterion_7() -> Outcome {
    let cfg = load("darcy_sweep.toml");
    let Some(ExperimentConfig::DarcySweep { eps_list }) = &cfg.experiment else {
        panic!("darcy_sweep.toml must declare the eps sweep");
    };
    let t = darcy_sweep(&cfg, eps_list)?;
    let gaps: Vec<String> = t.coupled.iter().map(|r| format!("{:.2e}", r.u_gap)).collect();
    Ok((
        t.pass(),
        format!(
            "frozen monotone {} with reduction {:.1}x; coupled monotone {} [{}]",
            t.frozen_monotone,
            t.frozen_reduction,
            t.coupled_monotone,
            gaps.join(", ")
        ),
    ))
}

fn criterion_8() -> Outcome {
    let g = GridSpec::unit_square(64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut forces: Vec<FaceField> = (0..2).map(|_| random_faces(g, &mut rng)).collect();
    let phi = ScalarField::from_fn(g, |x, y| 0.8 * ((x - 0.3) * 9.0).tanh() * (y * 5.0).cos());
    let mu = ScalarField::from_fn(g, |x, y| (4.0 * x * y).sin());
    let sigma = ScalarField::from_fn(g, |x, y| 1.0 + x * x - 0.5 * y);
    forces.push(korteweg_force(&phi, &mu, &sigma, 1.0)?);
    let (mut div, mut normal, mut energy) = (0.0f64, 0.0f64, 0.0f64);
    let mut tol = 0.0;
    for f in &forces {
        for eps in [0.0, 1e-3, 1e-1, 1.0] {
            let prm = FlowSolveParams::new(eps);
            tol = prm.krylov_tol;
            let s = FlowSolver::new(g, prm)?.solve(f)?;
            div = div.max(divergence(&s.u).max_abs());
            normal = normal.max(s.u.boundary_normal_max());
            let lhs = s.u.norm_sq() + eps * symmetric_gradient_norm_sq(&s.u);
            let rhs = face_inner_product(f, &s.u);
            energy = energy.max((lhs - rhs).abs() / rhs.abs());
        }
    }
    Ok((
        div <= 10.0 * tol && normal == 0.0 && energy <= 1e-8,
        format!("max |div u| {div:.1e}, max |u.n| on walls {normal:e}, energy identity rel. {energy:.1e}"),
    ))
}

fn criterion_9() -> Outcome {
    let cfg = load("mms.toml");
    let mc = match &cfg.experiment {
        Some(ExperimentConfig::Mms(m)) => m.clone(),
        _ => MmsConfig::default(),
    };
    let t = run_mms(cfg.grid, &cfg.model, &mc, cfg.numerics.mobility_face_rule)?;
    let ok = t.order_phi.iter().chain(&t.order_sigma).all(|&o| o >= 1.8);
    Ok((
        ok && mc.grids == [32, 64, 128],
        format!("orders phi {:.3?}, sigma {:.3?} on {:?}", t.order_phi, t.order_sigma, mc.grids),
    ))
}

fn ulps_apart(a: f64, b: f64) -> u64 {
    (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
}

fn criterion_10() -> Outcome {
    // worked by hand from P0 = min((18q-6p)/(12-5p), 4), S = min(6p/(12-5p), p), R = max(4, p/(p-1))
    let cases = [
        ((2.0, 2.0), (4.0, 2.0, 4.0)),
        ((1.2, 1.2), (2.4, 1.2, 6.0)),
        ((1.5, 2.0), (4.0, 1.5, 4.0)),
    ];
    let mut worst = 0;
    let mut shown = Vec::new();
    for ((p, q), (p0, s, r)) in cases {
        let got = theorem_exponents(p, q);
        worst = worst.max(ulps_apart(got.0, p0)).max(ulps_apart(got.1, s)).max(ulps_apart(got.2, r));
        shown.push(format!("({p},{q}) -> ({}, {}, {})", got.0, got.1, got.2));
    }
    Ok((worst <= 4, format!("{}; max {worst} ulp", shown.join("; "))))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("discrete calculus", criterion_1),
        ("constitutive identities", criterion_2),
        ("mass balance", criterion_3),
        ("minimum principle", criterion_4),
        ("energy dissipation", criterion_5),
        ("uniform bound in n", criterion_6),
        ("Brinkman to Darcy", criterion_7),
        ("flow solver", criterion_8),
        ("manufactured solutions", criterion_9),
        ("exponent arithmetic", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !filter.is_empty() && !filter.iter().any(|a| a == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        println!("{} criterion {id} ({name}): {detail} [{secs:.1} s]", if pass { "PASS" } else { "FAIL" });
        failed += usize::from(!pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
