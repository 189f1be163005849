//! Separable trigonometric bases that diagonalise the grid Laplacians.
//!
//! The cell-centred Neumann Laplacian is diagonal in the DCT-II basis; the
//! face-centred Laplacian with the wall value pinned to zero is diagonal in
//! the DST-I basis. Both share the eigenvalues `4/h^2 sin^2(pi k / 2n)`.
//! These are used as exact (or nearly exact) preconditioners.

use std::sync::Arc;

use rustdct::{Dst1, DctPlanner, TransformType2And3};

#[derive(Clone)]
enum Kind {
    /// Cell-centred, homogeneous Neumann: `n` unknowns, modes `cos(pi k (j+1/2)/n)`.
    Cosine(Arc<dyn TransformType2And3<f64>>),
    /// Interior face values with zero walls: `n-1` unknowns, modes `sin(pi k i/n)`.
    Sine(Arc<dyn Dst1<f64>>),
}

/// One-dimensional orthogonal basis with its Laplacian eigenvalues.
#[derive(Clone)]
pub(crate) struct Basis1d {
    kind: Kind,
    cells: usize,
    /// Eigenvalues of `-d^2/dx^2` (nonnegative).
    pub eig: Vec<f64>,
}

impl Basis1d {
    pub fn cosine(n: usize, h: f64) -> Self {
        let plan = DctPlanner::new().plan_dct2(n);
        let eig = (0..n).map(|k| symbol(k, n, h)).collect();
        Self {
            kind: Kind::Cosine(plan),
            cells: n,
            eig,
        }
    }

    pub fn sine(n: usize, h: f64) -> Self {
        let plan = DctPlanner::new().plan_dst1(n - 1);
        let eig = (1..n).map(|k| symbol(k, n, h)).collect();
        Self {
            kind: Kind::Sine(plan),
            cells: n,
            eig,
        }
    }

    pub fn len(&self) -> usize {
        self.eig.len()
    }

    fn forward(&self, buf: &mut [f64]) {
        match &self.kind {
            Kind::Cosine(p) => p.process_dct2(buf),
            Kind::Sine(p) => p.process_dst1(buf),
        }
    }

    fn inverse(&self, buf: &mut [f64]) {
        let scale = 2.0 / self.cells as f64;
        match &self.kind {
            Kind::Cosine(p) => p.process_dct3(buf),
            Kind::Sine(p) => p.process_dst1(buf),
        }
        buf.iter_mut().for_each(|v| *v *= scale);
    }
}

#[inline]
fn symbol(k: usize, n: usize, h: f64) -> f64 {
    let s = (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin();
    4.0 * s * s / (h * h)
}

/// Tensor-product basis for arrays stored `i + nx j`.
#[derive(Clone)]
pub(crate) struct Separable2d {
    pub bx: Basis1d,
    pub by: Basis1d,
}

impl Separable2d {
    pub fn new(bx: Basis1d, by: Basis1d) -> Self {
        Self { bx, by }
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.bx.len() * self.by.len()
    }

    /// Applies `v -> Q diag(s(lx, ly)) Q^{-1} v` in place, where `lx, ly` are
    /// the 1-D Laplacian eigenvalues of the mode.
    pub fn apply_symbol(&self, v: &mut [f64], s: impl Fn(f64, f64) -> f64) {
        let (nx, ny) = (self.bx.len(), self.by.len());
        debug_assert_eq!(v.len(), nx * ny);
        for row in v.chunks_mut(nx) {
            self.bx.forward(row);
        }
        let mut col = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = v[i + nx * j];
            }
            self.by.forward(&mut col);
            for (j, c) in col.iter_mut().enumerate() {
                *c *= s(self.bx.eig[i], self.by.eig[j]);
            }
            self.by.inverse(&mut col);
            for j in 0..ny {
                v[i + nx * j] = col[j];
            }
        }
        for row in v.chunks_mut(nx) {
            self.bx.inverse(row);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_round_trip() {
        for basis in [
            Separable2d::new(Basis1d::cosine(7, 0.1), Basis1d::sine(5, 0.3)),
            Separable2d::new(Basis1d::sine(6, 0.1), Basis1d::cosine(9, 0.3)),
        ] {
            let orig: Vec<f64> = (0..basis.len()).map(|k| (k as f64 * 0.37).sin()).collect();
            let mut v = orig.clone();
            basis.apply_symbol(&mut v, |_, _| 1.0);
            for (a, b) in v.iter().zip(&orig) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cosine_mode_is_eigenvector_of_neumann_stencil() {
        let n = 16;
        let h = 1.0 / n as f64;
        let b = Basis1d::cosine(n, h);
        let k = 3;
        let mode: Vec<f64> = (0..n)
            .map(|j| (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / n as f64).cos())
            .collect();
        for j in 0..n {
            let l = if j > 0 { mode[j - 1] } else { mode[j] };
            let r = if j + 1 < n { mode[j + 1] } else { mode[j] };
            let lap = (2.0 * mode[j] - l - r) / (h * h);
            assert!((lap - b.eig[k] * mode[j]).abs() < 1e-9);
        }
    }
}
