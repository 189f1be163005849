//! Structure-preserving finite-volume simulator for a Cahn-Hilliard-Oono /
//! chemotaxis / Brinkman system with a logarithmic potential and a
//! degenerate nonlinear sensitivity.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: MAC-staggered discrete calculus with Neumann / no-penetration walls.
//! * [`constitutive`]: potential, Yosida-plus-penalty regularisation, sensitivity, sources.
//! * [`cahn_hilliard`]: one convex-concave step of the order-parameter pair.
//! * [`nutrient`]: one positivity-preserving step of the nutrient equation.
//! * [`flow`]: Darcy and Brinkman solves driven by the Korteweg force.
//! * [`diagnostics`]: energy, entropy, mass and norm audits.
//! * [`sim`]: configuration, the coupled loop, experiments and file output.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cahn_hilliard;
pub mod constitutive;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod grid;
pub mod krylov;
pub mod model;
pub mod nutrient;
pub mod sim;
pub mod snapshot;
mod spectral;

pub use error::{ChbError, Result};
pub use grid::{FaceField, GridSpec, ScalarField};
pub use model::ModelParams;
