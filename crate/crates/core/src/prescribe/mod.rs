//! Curvature prescription pipelines.
//!
//! Every pipeline works in a [`ModelForm`]: a metric in the conformal class
//! of the input whose curvatures are (approximately) the constants
//! `(K_g, σ_g)` of the model. Conformal factors in results are always
//! relative to the input metric.

mod examples;
mod model;
mod pipelines;

use serde::Serialize;
use thiserror::Error;

use crate::elliptic::SolveError;
use crate::field::{FieldError, ScalarField};
use crate::mesh::MeshError;
use crate::monotone::{BracketKnobs, IterationConfig, IterationTrace, MonotoneError, Thresholds};
use crate::verify::VerificationReport;

pub use examples::{
    construct_example_pair, first_neumann_eigenvector, ExampleCase, ExamplePair, SignCheck,
    SignPattern,
};
pub use model::{
    uniformize_chi0, BoundaryPreference, ModelChoice, ModelForm, ModelKind, UniformizeInfo,
    UniformizeOptions,
};
pub use pipelines::{
    check_necessary_negative_chi, prescribe_gaussian, prescribe_geodesic, prescribe_pair_chi0,
    FeasibilityReport, Verdict,
};

#[derive(Debug, Error)]
pub enum PrescribeError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Monotone(#[from] MonotoneError),
    #[error("model form: {0}")]
    Model(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("example construction failed: {0}")]
    Example(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrescribeOptions {
    /// Boundary coefficient of the Gaussian pipeline.
    pub kappa: f64,
    /// Interior coefficient of the geodesic pipeline.
    pub a: f64,
    /// Fraction of a computed threshold actually used.
    pub safety: f64,
    pub iteration: IterationConfig,
    pub knobs: BracketKnobs,
    /// Allowed RMS curvature error of the rescaled metric, relative to
    /// `max(1, RMS of the target)`.
    pub curvature_tol: f64,
}

impl Default for PrescribeOptions {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            a: 1.0,
            safety: 0.9,
            iteration: IterationConfig::default(),
            knobs: BracketKnobs::default(),
            curvature_tol: 5e-2,
        }
    }
}

/// Model information carried into results.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSummary {
    pub kind: ModelKind,
    pub k_g: f64,
    pub sigma_g: f64,
    pub certified: bool,
    pub uniformized: bool,
    pub deviation: f64,
    pub tolerance: f64,
}

/// Constants chosen by a pipeline (`None` where not used).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Parameters {
    pub kappa: Option<f64>,
    pub a: Option<f64>,
    /// Interior multiplier `b` of the Gaussian pipeline.
    pub b: Option<f64>,
    /// Boundary multiplier `c`.
    pub c: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrescriptionResult {
    pub pipeline: &'static str,
    /// Conformal factor relative to the input metric.
    pub u: ScalarField,
    /// The realized metric is `metric_scale · e^{2u} g`.
    pub metric_scale: f64,
    pub realized_k: ScalarField,
    pub realized_sigma: ScalarField,
    pub thresholds: Thresholds,
    pub parameters: Parameters,
    pub model: ModelSummary,
    pub trace: Option<IterationTrace>,
    pub report: VerificationReport,
}
