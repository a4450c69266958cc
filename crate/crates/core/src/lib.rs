//! L1 discretizations of Caputo time-fractional subdiffusion problems on
//! graded temporal meshes.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: graded and quasi-graded temporal meshes.
//! - [`l1op`]: the L1 discrete Caputo operator, exact Caputo references and
//!   truncation profiles.
//! - [`schemes`]: discretizations `F(v, w)` of a semilinear term `f(u)` together
//!   with their consistency and one-sided Lipschitz constants.
//! - [`ode`]: the scalar fractional ODE stepper, stability/comparison drivers and
//!   a-priori error bounds.
//! - [`fdspace`]: 1-D finite differences in space and the semilinear PDE stepper.
//! - [`quasilinear`]: the fully implicit stepper for `a(u)`-type diffusion via the
//!   Kirchhoff transform.
//! - [`harness`]: convergence studies, double-mesh estimation, reports and the
//!   property suites behind the `l1sub` binary.

// `!(x > 0.0)`-style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fdspace;
pub mod harness;
pub mod l1op;
pub mod mesh;
pub mod numerics;
pub mod ode;
pub mod quasilinear;
pub mod schemes;
pub mod tridiag;

pub use error::{Error, Result};
pub use l1op::L1Row;
pub use mesh::TemporalMesh;
pub use schemes::{Nonlinearity, SchemeDescriptor, SchemeKind};
