//! Matrix-free Krylov solvers.

use crate::error::{ChbError, Result};
use crate::grid::dot;

#[derive(Clone, Copy, Debug, Default)]
pub struct KrylovStats {
    pub iterations: usize,
    /// Final residual relative to the right-hand side.
    pub residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Preconditioned conjugate gradients for a symmetric positive
/// (semi)definite operator. `x` holds the initial guess on entry.
pub fn cg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<KrylovStats> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(KrylovStats::default());
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();
    for it in 0..=max_iter {
        let rel = norm(&r) / bnorm;
        history.push(rel);
        if rel <= tol {
            return Ok(KrylovStats {
                iterations: it,
                residual: rel,
            });
        }
        if it == max_iter {
            break;
        }
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 || !pq.is_finite() {
            return Err(ChbError::Numeric(format!(
                "CG breakdown: p.Ap = {pq:e} at iteration {it}"
            )));
        }
        let a = rz / pq;
        for k in 0..n {
            x[k] += a * p[k];
            r[k] -= a * q[k];
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(ChbError::NoConvergence {
        solver: "conjugate gradients",
        iterations: max_iter,
        residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

/// Restarted GMRES with right preconditioning. `x` holds the initial guess.
pub fn gmres(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<KrylovStats> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(KrylovStats::default());
    }
    let m = restart.max(1);
    let mut total = 0;
    let mut tmp = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut history = Vec::new();
    loop {
        apply(x, &mut tmp);
        let r: Vec<f64> = b.iter().zip(&tmp).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        history.push(beta / bnorm);
        if beta / bnorm <= tol {
            return Ok(KrylovStats {
                iterations: total,
                residual: beta / bnorm,
            });
        }
        if total >= max_iter {
            break;
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            precond(&basis[k], &mut tmp);
            apply(&tmp, &mut w);
            for (l, v) in basis.iter().enumerate() {
                let h = dot(&w, v);
                hess[l][k] = h;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= h * vi;
                }
            }
            let hn = norm(&w);
            hess[k + 1][k] = hn;
            for l in 0..k {
                let t = cs[l] * hess[l][k] + sn[l] * hess[l + 1][k];
                hess[l + 1][k] = -sn[l] * hess[l][k] + cs[l] * hess[l + 1][k];
                hess[l][k] = t;
            }
            let denom = hess[k][k].hypot(hess[k + 1][k]);
            if denom == 0.0 {
                break;
            }
            cs[k] = hess[k][k] / denom;
            sn[k] = hess[k + 1][k] / denom;
            hess[k][k] = denom;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            total += 1;
            if g[k + 1].abs() / bnorm <= tol || hn == 0.0 || total >= max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // back substitution
        let mut y = vec![0.0; k_used];
        for l in (0..k_used).rev() {
            let mut s = g[l];
            for c in l + 1..k_used {
                s -= hess[l][c] * y[c];
            }
            y[l] = s / hess[l][l];
        }
        let mut z = vec![0.0; n];
        for (l, yl) in y.iter().enumerate() {
            for (zi, vi) in z.iter_mut().zip(&basis[l]) {
                *zi += yl * vi;
            }
        }
        precond(&z, &mut tmp);
        for (xi, ti) in x.iter_mut().zip(&tmp) {
            *xi += ti;
        }
        if k_used == 0 {
            break;
        }
    }
    Err(ChbError::NoConvergence {
        solver: "GMRES",
        iterations: total,
        residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}
