//! Discrete calculus on a uniform rectangular grid.
//!
//! Scalars live at cell centres, vector components on a MAC-staggered layout:
//! x-components on the `(nx+1) x ny` vertical faces, y-components on the
//! `nx x (ny+1)` horizontal faces. Boundary faces carry the normal component,
//! which the no-flux / no-penetration conditions pin to zero, so
//! [`divergence`] is the exact negative adjoint of [`gradient`] and
//! [`laplacian_neumann`] is literally their composition.

use serde::{Deserialize, Serialize};

use crate::error::{ChbError, Result};

/// Uniform cell-centred grid on `[0, lx] x [0, ly]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(ChbError::Config(format!(
                "grid needs at least 4 cells per direction, got {nx}x{ny}"
            )));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(ChbError::Config(format!(
                "domain sides must be positive, got {lx}x{ly}"
            )));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// `n x n` cells on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.nx, self.ny, self.lx, self.ly).map(|_| ())
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.hx() * self.hy()
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    #[inline]
    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn num_x_faces(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn num_y_faces(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    #[inline]
    pub fn x_face(&self, i: usize, j: usize) -> usize {
        i + (self.nx + 1) * j
    }

    #[inline]
    pub fn y_face(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    /// Centre of the vertical face `i` in row `j` (face `i` sits at `x = i hx`).
    pub fn x_face_center(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    pub fn y_face_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), j as f64 * self.hy())
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx(), j as f64 * self.hy())
    }

    /// Smallest cell side.
    pub fn h_min(&self) -> f64 {
        self.hx().min(self.hy())
    }
}

/// Cell-centred scalar field.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.num_cells()],
        }
    }

    /// Samples `f(x, y)` at cell centres.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.num_cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.cell_center(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(ChbError::GridMismatch);
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(ChbError::Numeric(format!("non-finite field value {v}")));
        }
        Ok(Self { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.cell(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn try_map(&self, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect::<Result<_>>()?;
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(ChbError::GridMismatch)
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Midpoint-rule integral over the domain.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.integral() / self.grid.area()
    }

    /// `L^2` norm squared under the midpoint rule.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert_eq!(self.grid, other.grid);
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
    }
}

/// MAC-staggered vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceField {
    grid: GridSpec,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            x: vec![0.0; grid.num_x_faces()],
            y: vec![0.0; grid.num_y_faces()],
        }
    }

    /// Samples the two components at their face centres. Boundary-normal
    /// components are forced to zero.
    pub fn from_fns(
        grid: GridSpec,
        fx: impl Fn(f64, f64) -> f64,
        fy: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut out = Self::zeros(grid);
        for j in 0..grid.ny {
            for i in 1..grid.nx {
                let (x, y) = grid.x_face_center(i, j);
                out.x[grid.x_face(i, j)] = fx(x, y);
            }
        }
        for j in 1..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.y_face_center(i, j);
                out.y[grid.y_face(i, j)] = fy(x, y);
            }
        }
        out
    }

    pub fn from_components(grid: GridSpec, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != grid.num_x_faces() || y.len() != grid.num_y_faces() {
            return Err(ChbError::GridMismatch);
        }
        Ok(Self { grid, x, y })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    #[inline]
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    #[inline]
    pub fn x_mut(&mut self) -> &mut [f64] {
        &mut self.x
    }

    #[inline]
    pub fn y_mut(&mut self) -> &mut [f64] {
        &mut self.y
    }

    #[inline]
    pub fn x_at(&self, i: usize, j: usize) -> f64 {
        self.x[self.grid.x_face(i, j)]
    }

    #[inline]
    pub fn y_at(&self, i: usize, j: usize) -> f64 {
        self.y[self.grid.y_face(i, j)]
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(ChbError::GridMismatch)
        }
    }

    /// Largest absolute normal component on the domain boundary.
    pub fn boundary_normal_max(&self) -> f64 {
        let g = &self.grid;
        let mut m: f64 = 0.0;
        for j in 0..g.ny {
            m = m.max(self.x_at(0, j).abs()).max(self.x_at(g.nx, j).abs());
        }
        for i in 0..g.nx {
            m = m.max(self.y_at(i, 0).abs()).max(self.y_at(i, g.ny).abs());
        }
        m
    }

    pub fn zero_boundary_normal(&mut self) {
        let g = self.grid;
        for j in 0..g.ny {
            self.x[g.x_face(0, j)] = 0.0;
            self.x[g.x_face(g.nx, j)] = 0.0;
        }
        for i in 0..g.nx {
            self.y[g.y_face(i, 0)] = 0.0;
            self.y[g.y_face(i, g.ny)] = 0.0;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.y)
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }

    /// Face-weighted `L^2` norm squared; every face carries the weight `hx hy`.
    pub fn norm_sq(&self) -> f64 {
        face_inner_product(self, self)
    }

    pub fn scale(&mut self, a: f64) {
        self.x.iter_mut().chain(self.y.iter_mut()).for_each(|v| *v *= a);
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert_eq!(self.grid, other.grid);
        for (s, o) in self.x.iter_mut().zip(&other.x) {
            *s += a * o;
        }
        for (s, o) in self.y.iter_mut().zip(&other.y) {
            *s += a * o;
        }
    }

    /// Componentwise product with another face field.
    pub fn mul(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a * b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a * b).collect(),
        }
    }
}

/// Centred difference across each interior face; boundary-normal
/// components vanish (ghost reflection).
pub fn gradient(f: &ScalarField) -> FaceField {
    let g = *f.grid();
    let (rhx, rhy) = (1.0 / g.hx(), 1.0 / g.hy());
    let v = f.values();
    let mut out = FaceField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            out.x[g.x_face(i, j)] = (v[g.cell(i, j)] - v[g.cell(i - 1, j)]) * rhx;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            out.y[g.y_face(i, j)] = (v[g.cell(i, j)] - v[g.cell(i, j - 1)]) * rhy;
        }
    }
    out
}

/// Per-cell flux balance divided by the cell size.
pub fn divergence(flux: &FaceField) -> ScalarField {
    let g = *flux.grid();
    let (rhx, rhy) = (1.0 / g.hx(), 1.0 / g.hy());
    let mut values = vec![0.0; g.num_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            values[g.cell(i, j)] = (flux.x[g.x_face(i + 1, j)] - flux.x[g.x_face(i, j)]) * rhx
                + (flux.y[g.y_face(i, j + 1)] - flux.y[g.y_face(i, j)]) * rhy;
        }
    }
    ScalarField { grid: g, values }
}

/// Homogeneous-Neumann Laplacian, `divergence(gradient(f))`.
pub fn laplacian_neumann(f: &ScalarField) -> ScalarField {
    divergence(&gradient(f))
}

/// `laplacian_neumann` applied twice; realises `dn f = 0` and `dn lap f = 0`.
pub fn bilaplacian_neumann(f: &ScalarField) -> ScalarField {
    laplacian_neumann(&laplacian_neumann(f))
}

/// Midpoint-rule `L^2` pairing.
pub fn inner_product(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.check_grid(g)?;
    Ok(dot(f.values(), g.values()) * f.grid().cell_volume())
}

pub fn mean(f: &ScalarField) -> f64 {
    f.mean()
}

/// `L^2` pairing of face fields, each face weighted by `hx hy`.
pub fn face_inner_product(a: &FaceField, b: &FaceField) -> f64 {
    debug_assert_eq!(a.grid, b.grid);
    (dot(&a.x, &b.x) + dot(&a.y, &b.y)) * a.grid.cell_volume()
}

/// Arithmetic average of the two cells adjacent to each interior face.
/// Boundary faces are set to zero.
pub fn face_average(f: &ScalarField) -> FaceField {
    let g = *f.grid();
    let v = f.values();
    let mut out = FaceField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            out.x[g.x_face(i, j)] = 0.5 * (v[g.cell(i, j)] + v[g.cell(i - 1, j)]);
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            out.y[g.y_face(i, j)] = 0.5 * (v[g.cell(i, j)] + v[g.cell(i, j - 1)]);
        }
    }
    out
}

/// Interpolates a face field to cell centres (component averages).
pub fn cell_components(u: &FaceField) -> (ScalarField, ScalarField) {
    let g = *u.grid();
    let mut ux = ScalarField::zeros(g);
    let mut uy = ScalarField::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.cell(i, j);
            ux.values[c] = 0.5 * (u.x_at(i, j) + u.x_at(i + 1, j));
            uy.values[c] = 0.5 * (u.y_at(i, j) + u.y_at(i, j + 1));
        }
    }
    (ux, uy)
}

/// Conservative upwind flux `q_up u` on every interior face.
pub fn upwind_flux(q: &ScalarField, u: &FaceField) -> FaceField {
    let g = *q.grid();
    let v = q.values();
    let mut out = FaceField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let k = g.x_face(i, j);
            let w = u.x[k];
            let donor = if w >= 0.0 { g.cell(i - 1, j) } else { g.cell(i, j) };
            out.x[k] = w * v[donor];
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let k = g.y_face(i, j);
            let w = u.y[k];
            let donor = if w >= 0.0 { g.cell(i, j - 1) } else { g.cell(i, j) };
            out.y[k] = w * v[donor];
        }
    }
    out
}

/// Allocation-free Neumann Laplacian on raw cell arrays. Performs the same
/// floating-point operations as `divergence(gradient(.))`, so the results
/// agree bitwise.
pub(crate) fn laplacian_into(g: &GridSpec, v: &[f64], out: &mut [f64]) {
    let (nx, ny) = (g.nx, g.ny);
    let (rhx, rhy) = (1.0 / g.hx(), 1.0 / g.hy());
    for j in 0..ny {
        for i in 0..nx {
            let c = i + nx * j;
            let fxl = if i > 0 { (v[c] - v[c - 1]) * rhx } else { 0.0 };
            let fxr = if i + 1 < nx { (v[c + 1] - v[c]) * rhx } else { 0.0 };
            let fyl = if j > 0 { (v[c] - v[c - nx]) * rhy } else { 0.0 };
            let fyr = if j + 1 < ny { (v[c + nx] - v[c]) * rhy } else { 0.0 };
            out[c] = (fxr - fxl) * rhx + (fyr - fyl) * rhy;
        }
    }
}

/// Largest eigenvalue bound of `-laplacian_neumann`.
pub(crate) fn laplacian_bound(g: &GridSpec) -> f64 {
    4.0 / (g.hx() * g.hx()) + 4.0 / (g.hy() * g.hy())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_tiny_grids() {
        assert!(GridSpec::new(3, 8, 1.0, 1.0).is_err());
        assert!(GridSpec::new(8, 8, 0.0, 1.0).is_err());
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = GridSpec::unit_square(8).unwrap();
        let grad = gradient(&ScalarField::constant(g, 3.7));
        assert_eq!(grad.max_abs(), 0.0);
    }

    #[test]
    fn gradient_of_linear_field() {
        let g = GridSpec::unit_square(16).unwrap();
        let grad = gradient(&ScalarField::from_fn(g, |x, _| x));
        for j in 0..g.ny {
            assert_eq!(grad.x_at(0, j), 0.0);
            assert_eq!(grad.x_at(g.nx, j), 0.0);
            for i in 1..g.nx {
                assert!((grad.x_at(i, j) - 1.0).abs() < 1e-13);
            }
        }
        assert!(grad.y().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn divergence_of_zero_is_zero() {
        let g = GridSpec::unit_square(8).unwrap();
        assert_eq!(divergence(&FaceField::zeros(g)).max_abs(), 0.0);
    }

    #[test]
    fn laplacian_conserves() {
        let g = GridSpec::new(12, 9, 2.0, 1.5).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (3.0 * x).sin() * y.exp() + x * x);
        assert!(laplacian_neumann(&f).integral().abs() < 1e-11);
        assert_eq!(laplacian_neumann(&ScalarField::constant(g, 2.0)).max_abs(), 0.0);
    }

    #[test]
    fn slice_laplacian_is_bitwise_composition() {
        let g = GridSpec::new(11, 7, 1.3, 0.9).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (4.0 * x * y).sin() + y * y * y);
        let mut out = vec![0.0; g.num_cells()];
        laplacian_into(&g, f.values(), &mut out);
        let reference = laplacian_neumann(&f);
        for (a, b) in out.iter().zip(reference.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn midpoint_mean_of_full_period_cosine() {
        let g = GridSpec::unit_square(32).unwrap();
        let f = ScalarField::from_fn(g, |x, _| (2.0 * PI * x).cos());
        assert!(mean(&f).abs() < 1e-15);
        assert_eq!(mean(&ScalarField::constant(g, 0.25)), 0.25);
    }

    #[test]
    fn inner_product_checks_grid() {
        let a = ScalarField::zeros(GridSpec::unit_square(8).unwrap());
        let b = ScalarField::zeros(GridSpec::unit_square(9).unwrap());
        assert!(matches!(inner_product(&a, &b), Err(ChbError::GridMismatch)));
    }

    #[test]
    fn upwind_flux_picks_donor() {
        let g = GridSpec::unit_square(4).unwrap();
        let q = ScalarField::from_fn(g, |x, _| x);
        let u = FaceField::from_fns(g, |_, _| -1.0, |_, _| 0.0);
        let f = upwind_flux(&q, &u);
        // velocity points in -x, so the donor is the right-hand cell
        assert!((f.x_at(1, 0) + q.at(1, 0)).abs() < 1e-15);
    }
}
