//! Numerical differential geometry for three-dimensional metric Lie groups
//! diffeomorphic to `R^3`: semidirect products `R^2 x_A R`, the universal
//! cover of `SL(2,R)`, and the product spaces `M^2(kappa) x R`.
//!
//! The crate is organised bottom-up:
//!
//! - [`group`]: points, multiplication, 2x2 matrix exponentials and
//!   one-parameter subgroups.
//! - [`frames`]: orthonormal frames, the metric, Levi-Civita connection,
//!   Ricci curvature, Killing fields and geodesics.
//! - [`subgroups`]: character of one-parameter subgroups of `SL~(2,R)`,
//!   Gauss map values of its two-dimensional subgroups and the projection to
//!   the hyperbolic plane.
//! - [`surface`]: immersed surfaces, fundamental forms, the left invariant
//!   Gauss map and the stability (Jacobi) operator.
//! - [`cmc`]: constant mean curvature surfaces invariant under a Killing
//!   field, rotational spheres and their area sweeps.
//! - [`flux`]: discrete CMC flux.
//! - [`io`]: named spaces, JSON specs and CSV emission.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cmc;
pub mod error;
pub mod flux;
pub mod frames;
pub mod group;
pub mod io;
pub mod ode;
pub mod spectral;
pub mod subgroups;
pub mod surface;

pub use error::{Error, Result};
pub use frames::VectorField;
pub use group::{expm2, Geometry, GroupPoint, LieVector, SpaceSpec};
