use std::fmt;
use std::str::FromStr;

use log::{debug, info};
use serde::Serialize;

use super::{ModelSummary, PrescribeError};
use crate::elliptic::{EllipticOperators, NeumannOptions, NeumannSolver};
use crate::mesh::{DiscreteCurvature, IntrinsicMetric, MeshError, SurfaceMesh};
use crate::verify::curvature_errors;

/// Constant-curvature representatives `(K_g, σ_g)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// `K_g = 0, σ_g = 0` (χ = 0).
    FlatGeodesic,
    /// `K_g = 0, σ_g = 1` (χ > 0).
    FlatUnit,
    /// `K_g = 0, σ_g = -1` (χ < 0).
    FlatNegUnit,
    /// `K_g = 1, σ_g = 0` (χ > 0).
    CurvedUnit,
    /// `K_g = -1, σ_g = 0` (χ < 0).
    CurvedNegUnit,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::FlatGeodesic,
        ModelKind::FlatUnit,
        ModelKind::FlatNegUnit,
        ModelKind::CurvedUnit,
        ModelKind::CurvedNegUnit,
    ];

    /// `(K_g, σ_g)`.
    pub fn constants(self) -> (f64, f64) {
        match self {
            ModelKind::FlatGeodesic => (0.0, 0.0),
            ModelKind::FlatUnit => (0.0, 1.0),
            ModelKind::FlatNegUnit => (0.0, -1.0),
            ModelKind::CurvedUnit => (1.0, 0.0),
            ModelKind::CurvedNegUnit => (-1.0, 0.0),
        }
    }

    /// Sign of χ forced by Gauss–Bonnet.
    pub fn chi_sign(self) -> i64 {
        let (k, s) = self.constants();
        (k + s) as i64
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::FlatGeodesic => "flat-geodesic",
            ModelKind::FlatUnit => "flat-unit",
            ModelKind::FlatNegUnit => "flat-neg-unit",
            ModelKind::CurvedUnit => "curved-unit",
            ModelKind::CurvedNegUnit => "curved-neg-unit",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ModelKind::ALL.iter().map(|k| k.name()).collect();
                format!(
                    "unknown model '{s}' (expected auto, uniformize or one of {})",
                    names.join(", ")
                )
            })
    }
}

/// How to obtain the model form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelChoice {
    /// Uniformize when χ = 0, otherwise declare the preferred kind.
    Auto,
    Uniformize,
    Declared(ModelKind),
}

impl FromStr for ModelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(ModelChoice::Auto),
            "uniformize" => Ok(ModelChoice::Uniformize),
            other => other.parse().map(ModelChoice::Declared),
        }
    }
}

/// Which family `Auto` picks for χ ≠ 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryPreference {
    /// Flat with constant boundary curvature.
    Flat,
    /// Constant Gaussian curvature with geodesic boundary.
    Geodesic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformizeOptions {
    /// Newton steps on the angle defects after the linear solve.
    pub newton: bool,
    pub max_newton: usize,
    /// Stop once every defect and turning is below this (radians).
    pub angle_tol: f64,
}

impl Default for UniformizeOptions {
    fn default() -> Self {
        Self {
            newton: true,
            max_newton: 30,
            angle_tol: 1e-13,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct UniformizeInfo {
    /// Largest |defect| or |turning| before, after the linear step, and at the end.
    pub initial_max_angle: f64,
    pub linear_max_angle: f64,
    pub final_max_angle: f64,
    pub newton_steps: usize,
}

fn angle_vector(mesh: &SurfaceMesh, c: &DiscreteCurvature) -> Vec<f64> {
    let mut theta = c.interior_defect.clone();
    for (s, &v) in mesh.boundary_vertices().iter().enumerate() {
        theta[v] += c.boundary_turning[s];
    }
    theta
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `S δ = -Θ` for the angle-defect vector `Θ` of `metric`.
fn defect_step(
    mesh: &SurfaceMesh,
    metric: &IntrinsicMetric,
    theta: &[f64],
) -> Result<Vec<f64>, PrescribeError> {
    let ops = EllipticOperators::assemble(mesh, metric);
    let m = ops.interior_mass();
    let bm = ops.boundary_mass();
    // -Θ = M f + B g with f on interior rows and g on boundary rows
    let f: Vec<f64> = (0..theta.len())
        .map(|i| if bm[i] > 0.0 { 0.0 } else { -theta[i] / m[i] })
        .collect();
    let g: Vec<f64> = ops
        .boundary_vertices()
        .iter()
        .map(|&v| -theta[v] / bm[v])
        .collect();
    let opts = NeumannOptions {
        project: true,
        ..Default::default()
    };
    let (du, _, _) = NeumannSolver::new(&ops)?.solve(&f, &g, opts)?;
    Ok(du)
}

/// Conformal factor taking a χ = 0 metric to a flat metric with geodesic
/// boundary.
///
/// The linearization of the angle defects under vertex scaling is the
/// cotangent stiffness, so one Neumann solve `S u = -Θ` removes the defects
/// to first order; optional Newton steps (same system on the current
/// metric, step halved while a triangle inequality fails) drive them to
/// roundoff. The result has zero mass-weighted mean.
pub fn uniformize_chi0(
    mesh: &SurfaceMesh,
    metric: &IntrinsicMetric,
    opts: &UniformizeOptions,
) -> Result<(Vec<f64>, UniformizeInfo), PrescribeError> {
    let chi = mesh.euler_characteristic();
    if chi != 0 {
        return Err(PrescribeError::Model(format!(
            "uniformization needs χ = 0, mesh has χ = {chi}"
        )));
    }
    let theta = angle_vector(mesh, &DiscreteCurvature::compute(mesh, metric));
    let mut info = UniformizeInfo {
        initial_max_angle: max_abs(&theta),
        ..Default::default()
    };
    let mut u = defect_step(mesh, metric, &theta)?;
    let mut current = metric.rescale(mesh, &u, 1.0)?;
    let mut theta = angle_vector(mesh, &DiscreteCurvature::compute(mesh, &current));
    info.linear_max_angle = max_abs(&theta);
    debug!(
        "uniformization: linear step leaves max angle {:.3e}",
        info.linear_max_angle
    );
    if opts.newton {
        while info.newton_steps < opts.max_newton && max_abs(&theta) > opts.angle_tol {
            let du = defect_step(mesh, &current, &theta)?;
            let before = max_abs(&theta);
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = u.iter().zip(&du).map(|(u, d)| u + t * d).collect();
                match metric.rescale(mesh, &trial, 1.0) {
                    Ok(m) => {
                        let th = angle_vector(mesh, &DiscreteCurvature::compute(mesh, &m));
                        if max_abs(&th) < before || t < 1e-3 {
                            u = trial;
                            current = m;
                            theta = th;
                            break;
                        }
                    }
                    Err(MeshError::TriangleInequality { .. }) if t >= 1e-3 => {}
                    Err(e) => return Err(e.into()),
                }
                t *= 0.5;
            }
            info.newton_steps += 1;
            if max_abs(&theta) >= before {
                break;
            }
        }
    }
    let ops = EllipticOperators::assemble(mesh, metric);
    let mean = ops.integrate(&u) / ops.volume();
    u.iter_mut().for_each(|x| *x -= mean);
    let current = metric.rescale(mesh, &u, 1.0)?;
    info.final_max_angle = max_abs(&angle_vector(
        mesh,
        &DiscreteCurvature::compute(mesh, &current),
    ));
    info!(
        "uniformized: max angle {:.3e} -> {:.3e} ({} Newton steps)",
        info.initial_max_angle, info.final_max_angle, info.newton_steps
    );
    Ok((u, info))
}

/// Tolerance for certifying a declared model: RMS curvature deviation
/// `1e-2`, relaxed quadratically for meshes coarser than `h = 0.1`
/// (relative to the square root of the area).
pub fn model_tolerance(h_relative: f64) -> f64 {
    1e-2 * (h_relative / 0.1).powi(2).max(1.0)
}

/// A metric in the conformal class of the input with model curvatures.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelForm {
    pub kind: ModelKind,
    pub certified: bool,
    pub uniformized: bool,
    /// Largest RMS deviation (interior, boundary) of the model metric's
    /// curvature densities from the declared constants.
    pub deviation: f64,
    pub tolerance: f64,
    pub uniformize_info: Option<UniformizeInfo>,
    input: IntrinsicMetric,
    metric: IntrinsicMetric,
    base_u: Vec<f64>,
}

impl ModelForm {
    /// Accepts the input metric as a representative of `kind`; the
    /// curvature deviation decides `certified`.
    pub fn declare(
        mesh: &SurfaceMesh,
        metric: &IntrinsicMetric,
        kind: ModelKind,
    ) -> Result<Self, PrescribeError> {
        let chi = mesh.euler_characteristic();
        if chi.signum() != kind.chi_sign() {
            return Err(PrescribeError::Model(format!(
                "model {kind} requires sign(χ) = {}, mesh has χ = {chi}",
                kind.chi_sign()
            )));
        }
        let mut form = Self {
            kind,
            certified: false,
            uniformized: false,
            deviation: 0.0,
            tolerance: 0.0,
            uniformize_info: None,
            input: metric.clone(),
            metric: metric.clone(),
            base_u: vec![0.0; mesh.vertex_count()],
        };
        form.certify(mesh);
        Ok(form)
    }

    /// Flat model with geodesic boundary for χ = 0 via [`uniformize_chi0`].
    pub fn uniformize(
        mesh: &SurfaceMesh,
        metric: &IntrinsicMetric,
        opts: &UniformizeOptions,
    ) -> Result<Self, PrescribeError> {
        let (u, info) = uniformize_chi0(mesh, metric, opts)?;
        let mut form = Self {
            kind: ModelKind::FlatGeodesic,
            certified: false,
            uniformized: true,
            deviation: 0.0,
            tolerance: 0.0,
            uniformize_info: Some(info),
            input: metric.clone(),
            metric: metric.rescale(mesh, &u, 1.0)?,
            base_u: u,
        };
        form.certify(mesh);
        Ok(form)
    }

    pub fn resolve(
        choice: ModelChoice,
        mesh: &SurfaceMesh,
        metric: &IntrinsicMetric,
        preference: BoundaryPreference,
    ) -> Result<Self, PrescribeError> {
        match choice {
            ModelChoice::Uniformize => {
                Self::uniformize(mesh, metric, &UniformizeOptions::default())
            }
            ModelChoice::Declared(kind) => Self::declare(mesh, metric, kind),
            ModelChoice::Auto => {
                let chi = mesh.euler_characteristic();
                let kind = match (chi.signum(), preference) {
                    (0, _) => return Self::uniformize(mesh, metric, &UniformizeOptions::default()),
                    (1, BoundaryPreference::Flat) => ModelKind::FlatUnit,
                    (1, BoundaryPreference::Geodesic) => ModelKind::CurvedUnit,
                    (_, BoundaryPreference::Flat) => ModelKind::FlatNegUnit,
                    (_, BoundaryPreference::Geodesic) => ModelKind::CurvedNegUnit,
                };
                Self::declare(mesh, metric, kind)
            }
        }
    }

    fn certify(&mut self, mesh: &SurfaceMesh) {
        let (k_g, sigma_g) = self.kind.constants();
        let e = curvature_errors(
            mesh,
            &self.metric,
            &vec![k_g; mesh.vertex_count()],
            &vec![sigma_g; mesh.boundary_vertices().len()],
        );
        let (ri, rb) = e.rms();
        self.deviation = ri.max(rb);
        self.tolerance = model_tolerance(e.h / e.area.sqrt());
        self.certified = self.deviation <= self.tolerance;
        if !self.certified {
            log::warn!(
                "metric deviates from model {} by {:.3e} (tolerance {:.3e})",
                self.kind,
                self.deviation,
                self.tolerance
            );
        }
    }

    pub fn k_g(&self) -> f64 {
        self.kind.constants().0
    }

    pub fn sigma_g(&self) -> f64 {
        self.kind.constants().1
    }

    /// The model metric; pipelines solve on this.
    pub fn metric(&self) -> &IntrinsicMetric {
        &self.metric
    }

    pub fn input_metric(&self) -> &IntrinsicMetric {
        &self.input
    }

    /// Conformal factor from the input metric to the model metric.
    pub fn base_u(&self) -> &[f64] {
        &self.base_u
    }

    pub fn summary(&self) -> ModelSummary {
        let (k_g, sigma_g) = self.kind.constants();
        ModelSummary {
            kind: self.kind,
            k_g,
            sigma_g,
            certified: self.certified,
            uniformized: self.uniformized,
            deviation: self.deviation,
            tolerance: self.tolerance,
        }
    }
}
