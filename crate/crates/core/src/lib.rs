//! Conformal curvature prescription on triangulated surfaces with boundary.
//!
//! The crate solves the semilinear boundary value problem
//!
//! ```text
//! -Δu + A u + K_g = K e^{2u}        in M
//!  ∂u/∂ν + κ u + σ_g = c σ e^{u}    on ∂M
//! ```
//!
//! on a piecewise-flat surface by monotone iteration between an ordered pair
//! of discrete sub- and super-solutions, and uses it to realise prescribed
//! Gaussian and geodesic curvature through the conformal change
//! `g̃ = e^{2u} g`. Every result can be checked against angle defects of the
//! rescaled edge lengths, which is a discretisation independent of the
//! cotangent operator used to solve.
//!
//! Module map:
//!
//! * [`mesh`]: loading, intrinsic edge lengths, angle defects, vertex scaling.
//! * [`elliptic`]: cotangent stiffness, lumped masses, Robin and Neumann solves.
//! * [`monotone`]: the iteration engine and the bracket builders.
//! * [`prescribe`]: curvature prescription pipelines and example pairs.
//! * [`verify`]: Gauss–Bonnet, residual and maximum-principle checks.
//! * [`report`]: the versioned JSON document written by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elliptic;
pub mod field;
pub mod mesh;
pub mod monotone;
pub mod par;
pub mod prescribe;
pub mod report;
pub mod verify;

pub use elliptic::{EllipticOperators, RobinProblem, SolveError, SolveStats};
pub use field::{FieldDomain, FieldError, FieldSource, ScalarField};
pub use mesh::{DiscreteCurvature, IntrinsicMetric, LoadedMesh, MeshError, SurfaceMesh};
pub use monotone::{Bracket, IterationConfig, IterationTrace, MonotoneError, SemilinearProblem};
pub use prescribe::{ModelForm, ModelKind, PrescribeError, PrescribeOptions, PrescriptionResult};
pub use report::Report;
pub use verify::VerificationReport;
