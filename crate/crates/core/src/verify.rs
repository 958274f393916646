//! Checks that are independent of the solver: Gauss–Bonnet, residuals of
//! the discrete equations, maximum-principle probes, the `w = e^{-2u}`
//! transform identity, and angle-defect curvature of rescaled metrics.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::elliptic::{EllipticOperators, SolveError};
use crate::field::ScalarField;
use crate::mesh::{DiscreteCurvature, IntrinsicMetric, MeshError, SurfaceMesh};
use crate::monotone::SemilinearProblem;
use crate::par;

/// Default seed of the randomized probes.
pub const DEFAULT_SEED: u64 = 42;

/// `total defect + total turning - 2πχ`.
pub fn gauss_bonnet_residual(mesh: &SurfaceMesh, metric: &IntrinsicMetric) -> f64 {
    let curvature = DiscreteCurvature::compute(mesh, metric);
    curvature.total() - 2.0 * PI * mesh.euler_characteristic() as f64
}

/// Mass-normalized residual sups `(interior, boundary)` of `u`, recomputed
/// from scratch.
pub fn pde_residual(
    problem: &SemilinearProblem,
    ops: &EllipticOperators,
    u: &ScalarField,
) -> Result<(f64, f64), crate::monotone::MonotoneError> {
    problem.validate(ops)?;
    ops.conform_vertices(u)?;
    Ok(problem.residual_sups(ops, u.values()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    pub gauss_bonnet_residual: f64,
    pub pde_residual_sup: f64,
    pub boundary_residual_sup: f64,
    pub maxprin_applicable: bool,
    pub checks: Vec<Check>,
    pub curvature: Option<RescaleErrors>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Discrepancy between the angle-defect curvature of `scale e^{2u} g` and
/// target curvature fields.
///
/// Interior errors use interior vertices only. The boundary density at a
/// boundary vertex is `(turning - K_target Ã) / ℓ̃`, removing the Gaussian
/// curvature carried by the boundary vertex's own dual cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RescaleErrors {
    /// Longest edge of the rescaled metric.
    pub h: f64,
    pub interior_l2: f64,
    pub interior_sup: f64,
    /// `interior_l2` over the L² norm of the target (or 1 if it vanishes).
    pub interior_l2_relative: f64,
    pub boundary_l2: f64,
    pub boundary_sup: f64,
    pub boundary_l2_relative: f64,
    pub area: f64,
    pub boundary_length: f64,
}

impl RescaleErrors {
    /// Root-mean-square errors `(interior, boundary)`.
    pub fn rms(&self) -> (f64, f64) {
        (
            self.interior_l2 / self.area.sqrt(),
            self.boundary_l2 / self.boundary_length.sqrt(),
        )
    }
}

pub fn conformal_rescale_verify(
    mesh: &SurfaceMesh,
    metric: &IntrinsicMetric,
    u: &[f64],
    scale: f64,
    k_target: &[f64],
    sigma_target: &[f64],
) -> Result<RescaleErrors, MeshError> {
    assert_eq!(k_target.len(), mesh.vertex_count());
    assert_eq!(sigma_target.len(), mesh.boundary_vertices().len());
    let rescaled = metric.rescale(mesh, u, scale)?;
    Ok(curvature_errors(mesh, &rescaled, k_target, sigma_target))
}

/// [`conformal_rescale_verify`] for a metric that is already rescaled.
pub fn curvature_errors(
    mesh: &SurfaceMesh,
    metric: &IntrinsicMetric,
    k_target: &[f64],
    sigma_target: &[f64],
) -> RescaleErrors {
    let c = DiscreteCurvature::compute(mesh, metric);
    let mut out = RescaleErrors {
        h: metric.max_edge_length(),
        ..Default::default()
    };
    let (mut err2, mut norm2) = (0.0, 0.0);
    for v in mesh.interior_vertices() {
        let a = c.dual_area[v];
        let e = c.interior_defect[v] / a - k_target[v];
        err2 += a * e * e;
        norm2 += a * k_target[v] * k_target[v];
        out.interior_sup = out.interior_sup.max(e.abs());
    }
    out.area = c.dual_area.iter().sum();
    out.interior_l2 = err2.sqrt();
    out.interior_l2_relative = relative(out.interior_l2, norm2.sqrt());

    let (mut err2, mut norm2) = (0.0, 0.0);
    for (s, &v) in mesh.boundary_vertices().iter().enumerate() {
        let l = c.boundary_dual_length[s];
        let density = (c.boundary_turning[s] - k_target[v] * c.dual_area[v]) / l;
        let e = density - sigma_target[s];
        err2 += l * e * e;
        norm2 += l * sigma_target[s] * sigma_target[s];
        out.boundary_sup = out.boundary_sup.max(e.abs());
        out.boundary_length += l;
    }
    out.boundary_l2 = err2.sqrt();
    out.boundary_l2_relative = relative(out.boundary_l2, norm2.sqrt());
    out
}

fn relative(err: f64, norm: f64) -> f64 {
    if norm > 0.0 {
        err / norm
    } else {
        err
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeVariant {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Largest wrong-signed value relative to `sup |u|`.
    pub worst_violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximumPrincipleReport {
    pub applicable: bool,
    pub min_edge_weight: f64,
    pub seed: u64,
    pub variants: Vec<ProbeVariant>,
}

impl MaximumPrincipleReport {
    pub fn passed(&self) -> bool {
        !self.applicable || self.variants.iter().all(|v| v.failures == 0)
    }
}

const PROBE_SLACK: f64 = 1e-12;

/// Randomized sign tests of the discrete maximum principle:
///
/// * `robin_nonpositive`: `(S + κB) u = M f + B g` with `f, g <= 0` gives `u <= 0`;
/// * `robin_nonnegative`: the same with `f, g >= 0` gives `u >= 0`;
/// * `interior_coefficient`: `(S + κM) u = M f + B g` with `f, g <= 0` gives `u <= 0`.
///
/// Data are sparse random fields (half the entries zero). Meshes with a
/// negative cotangent weight are reported as not applicable.
pub fn maximum_principle_probe(
    ops: &EllipticOperators,
    kappa: f64,
    trials: usize,
    seed: u64,
) -> Result<MaximumPrincipleReport, SolveError> {
    if !(kappa > 0.0) {
        return Err(SolveError::NegativeCoefficient(kappa));
    }
    let min_edge_weight = ops.min_edge_weight();
    let scale = ops
        .edge_weights()
        .iter()
        .fold(0.0f64, |m, w| m.max(w.abs()));
    let applicable = min_edge_weight >= -1e-12 * scale;
    let mut report = MaximumPrincipleReport {
        applicable,
        min_edge_weight,
        seed,
        variants: Vec::new(),
    };
    if !applicable {
        return Ok(report);
    }
    let (n, nb) = (ops.vertex_count(), ops.boundary_vertices().len());
    let robin = ops.factor_constant(0.0, kappa)?;
    let interior = ops.factor_constant(kappa, 0.0)?;
    let variants: [(&'static str, &_, f64); 3] = [
        ("robin_nonpositive", &robin, -1.0),
        ("robin_nonnegative", &robin, 1.0),
        ("interior_coefficient", &interior, -1.0),
    ];
    for (index, (name, factor, sign)) in variants.into_iter().enumerate() {
        let outcomes = par::map_range(trials, |trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, index as u64, trial as u64));
            let mut sample = |len: usize| -> Vec<f64> {
                (0..len)
                    .map(|_| {
                        if rng.random_bool(0.5) {
                            sign * rng.random::<f64>()
                        } else {
                            0.0
                        }
                    })
                    .collect()
            };
            let f = sample(n);
            let g = sample(nb);
            let (u, _) = factor.solve(&ops.load(&f, &g))?;
            let size = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let wrong = u.iter().map(|x| -sign * x).fold(0.0f64, f64::max);
            Ok::<_, SolveError>(if size > 0.0 { wrong / size } else { 0.0 })
        });
        let mut v = ProbeVariant {
            name,
            trials,
            failures: 0,
            worst_violation: 0.0,
        };
        for o in outcomes {
            let o = o?;
            v.worst_violation = v.worst_violation.max(o);
            if o > PROBE_SLACK {
                v.failures += 1;
            }
        }
        report.variants.push(v);
    }
    Ok(report)
}

fn trial_seed(seed: u64, variant: u64, trial: u64) -> u64 {
    seed ^ variant.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Result of [`transform_identity_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransformIdentityReport {
    /// Discrete dual norm `(dᵀ (S + M)⁻¹ d)^{1/2}` of the row discrepancy.
    pub discrepancy: f64,
    /// `discrepancy` over the dual norm of the u-side rows.
    pub relative_discrepancy: f64,
    /// Largest row discrepancy over its row mass.
    pub discrepancy_sup: f64,
    /// Rows whose u-side residual exceeds the row discrepancy.
    pub decisive_rows: usize,
    /// Decisive rows whose inequality direction flips as stated.
    pub agreeing_rows: usize,
}

impl TransformIdentityReport {
    pub fn directions_preserved(&self) -> bool {
        self.agreeing_rows == self.decisive_rows
    }
}

/// Compares the two sides of the transform `w = e^{-2u}`:
///
/// ```text
/// -Δw - 2wK_g + |∇w|²/w = -2w(-Δu + K_g)      in M
///  ∂w/∂ν - 2wσ_g        = -2w(∂u/∂ν + σ_g)    on ∂M
/// ```
///
/// in lumped weak form, row by row, and checks that the u-side inequalities
/// `-Δu + K_g >= K e^{2u}`, `∂u/∂ν + σ_g >= σ e^{u}` turn into the w-side
/// inequalities `... <= -2K`, `... <= -2σ w^{1/2}` with the same rows.
pub fn transform_identity_check(
    ops: &EllipticOperators,
    u: &[f64],
    k_g: &[f64],
    sigma_g: &[f64],
    k: &[f64],
    sigma: &[f64],
) -> Result<TransformIdentityReport, SolveError> {
    let n = ops.vertex_count();
    assert!(u.len() == n && k_g.len() == n && k.len() == n);
    let w: Vec<f64> = u.iter().map(|u| (-2.0 * u).exp()).collect();
    let m = ops.interior_mass();
    let bm = ops.boundary_mass();
    let kg_b = ops.expand_boundary(sigma_g);
    let sig_b = ops.expand_boundary(sigma);
    let su = ops.apply_stiffness(u);
    let sw = ops.apply_stiffness(&w);
    let grad = ops.gradient_energy_density(&w);

    // u-side rows: (-Δu + K_g - K e^{2u}) + boundary (∂u/∂ν + σ_g - σ e^{u})
    let u_rows: Vec<f64> = (0..n)
        .map(|i| {
            su[i]
                + m[i] * (k_g[i] - k[i] * (2.0 * u[i]).exp())
                + bm[i] * (kg_b[i] - sig_b[i] * u[i].exp())
        })
        .collect();
    let lhs: Vec<f64> = (0..n)
        .map(|i| {
            sw[i] + m[i] * (-2.0 * w[i] * k_g[i] + grad[i] / w[i]) - bm[i] * 2.0 * w[i] * kg_b[i]
        })
        .collect();
    let rhs: Vec<f64> = (0..n)
        .map(|i| -2.0 * w[i] * (su[i] + m[i] * k_g[i] + bm[i] * kg_b[i]))
        .collect();
    let d: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| l - r).collect();
    // w-side residual: lhs + 2K + 2σ w^{1/2}, which should be <= 0 where u_rows >= 0
    let w_rows: Vec<f64> = (0..n)
        .map(|i| lhs[i] + m[i] * 2.0 * k[i] + bm[i] * 2.0 * sig_b[i] * w[i].sqrt())
        .collect();

    let factor = ops.factor_constant(1.0, 0.0)?;
    let dual = |v: &[f64]| -> Result<f64, SolveError> {
        let (x, _) = factor.solve(v)?;
        Ok(x.iter()
            .zip(v)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .max(0.0)
            .sqrt())
    };
    let discrepancy = dual(&d)?;
    let reference = dual(&rhs)?;
    let mut report = TransformIdentityReport {
        discrepancy,
        relative_discrepancy: relative(discrepancy, reference),
        discrepancy_sup: d
            .iter()
            .zip(m.iter().zip(bm))
            .map(|(d, (m, b))| d.abs() / (m + b))
            .fold(0.0, f64::max),
        decisive_rows: 0,
        agreeing_rows: 0,
    };
    for i in 0..n {
        // the w-side row equals -2w_i times the u-side row up to d_i
        if u_rows[i].abs() * 2.0 * w[i] > d[i].abs() {
            report.decisive_rows += 1;
            if u_rows[i].signum() == -w_rows[i].signum() {
                report.agreeing_rows += 1;
            }
        }
    }
    Ok(report)
}
