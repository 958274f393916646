use log::{info, warn};
use serde::Serialize;

use super::{
    ModelForm, ModelKind, Parameters, PrescribeError, PrescribeOptions, PrescriptionResult,
};
use crate::elliptic::{solve_robin, EllipticOperators, RobinProblem};
use crate::field::ScalarField;
use crate::mesh::{IntrinsicMetric, SurfaceMesh};
use crate::monotone::{
    bm1_thresholds, bm2_thresholds, build_bracket_bm1, build_bracket_bm2, build_bracket_chi0,
    iterate, IterationTrace, SemilinearProblem, Thresholds,
};
use crate::verify::{conformal_rescale_verify, gauss_bonnet_residual, Check, VerificationReport};

/// Gauss–Bonnet tolerance of rescaled metrics.
pub(crate) const GAUSS_BONNET_TOL: f64 = 1e-9;

pub(crate) struct Outcome<'a> {
    pub pipeline: &'static str,
    pub u_model: Vec<f64>,
    pub scale: f64,
    pub realized_k: Vec<f64>,
    pub realized_sigma: Vec<f64>,
    pub problem: &'a SemilinearProblem,
    pub residual_tol: f64,
    pub thresholds: Thresholds,
    pub parameters: Parameters,
    pub trace: Option<IterationTrace>,
}

/// Builds the result and its verification report. The conformal factor is
/// composed with the model's base factor and every check is recomputed
/// from the input metric.
pub(crate) fn finish(
    mesh: &SurfaceMesh,
    model: &ModelForm,
    ops: &EllipticOperators,
    out: Outcome<'_>,
    opts: &PrescribeOptions,
) -> Result<PrescriptionResult, PrescribeError> {
    let u: Vec<f64> = model
        .base_u()
        .iter()
        .zip(&out.u_model)
        .map(|(b, u)| b + u)
        .collect();
    let input = model.input_metric();
    let rescaled = input.rescale(mesh, &u, out.scale)?;
    let gb = gauss_bonnet_residual(mesh, &rescaled);
    let (ri, rb) = out.problem.residual_sups(ops, &out.u_model);
    let errors = conformal_rescale_verify(
        mesh,
        input,
        &u,
        out.scale,
        &out.realized_k,
        &out.realized_sigma,
    )?;
    let (ei, eb) = errors.rms();
    let rms = |v: &[f64], w: &[f64]| {
        let total: f64 = w.iter().sum();
        (v.iter().zip(w).map(|(x, w)| w * x * x).sum::<f64>() / total).sqrt()
    };
    let k_scale = rms(&out.realized_k, ops.interior_mass()).max(1.0);
    let bm = ops.restrict_to_boundary(ops.boundary_mass());
    let s_scale = rms(&out.realized_sigma, &bm).max(1.0);

    let mut checks = vec![
        Check::at_most("gauss_bonnet", gb.abs(), GAUSS_BONNET_TOL),
        Check::at_most("pde_residual_interior", ri, out.residual_tol),
        Check::at_most("pde_residual_boundary", rb, out.residual_tol),
        Check::at_most("curvature_interior_rms", ei, opts.curvature_tol * k_scale),
        Check::at_most("curvature_boundary_rms", eb, opts.curvature_tol * s_scale),
    ];
    if let Some(t) = &out.trace {
        let slack = 1e-10 * (1.0 + out.u_model.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        checks.push(Check::at_most(
            "monotone_iterates",
            t.max_increase.max(0.0),
            slack,
        ));
    }
    if !model.certified {
        warn!(
            "model {} is not certified; curvature errors include the model deviation",
            model.kind
        );
    }
    let report = VerificationReport {
        gauss_bonnet_residual: gb,
        pde_residual_sup: ri,
        boundary_residual_sup: rb,
        maxprin_applicable: ops.weights_nonnegative(1e-12),
        checks,
        curvature: Some(errors),
    };
    Ok(PrescriptionResult {
        pipeline: out.pipeline,
        u: ScalarField::on_vertices(u)?,
        metric_scale: out.scale,
        realized_k: ScalarField::on_vertices(out.realized_k)?,
        realized_sigma: ScalarField::on_boundary(out.realized_sigma)?,
        thresholds: out.thresholds,
        parameters: out.parameters,
        model: model.summary(),
        trace: out.trace,
        report,
    })
}

fn vertex_values<'a>(
    ops: &EllipticOperators,
    field: &'a ScalarField,
) -> Result<&'a [f64], PrescribeError> {
    ops.conform_vertices(field)?;
    Ok(field.values())
}

fn boundary_values<'a>(
    ops: &EllipticOperators,
    field: &'a ScalarField,
) -> Result<&'a [f64], PrescribeError> {
    ops.conform_boundary(field)?;
    Ok(field.values())
}

/// Realizes `K` as the Gaussian curvature of `b e^{2u} g` in a flat model.
///
/// Solves `-Δu = bK e^{2u}`, `∂u/∂ν + κu = 0` with `b = 1` if
/// `sup K⁺ <= C₀` and `b = safety · C₀ / sup K⁺` otherwise. The boundary
/// curvature is then `b^{-1/2} (σ_g - κu) e^{-u}`.
pub fn prescribe_gaussian(
    mesh: &SurfaceMesh,
    model: &ModelForm,
    k: &ScalarField,
    opts: &PrescribeOptions,
) -> Result<PrescriptionResult, PrescribeError> {
    if model.k_g() != 0.0 {
        return Err(PrescribeError::Model(format!(
            "Gaussian prescription needs a flat model, got {}",
            model.kind
        )));
    }
    let ops = EllipticOperators::assemble(mesh, model.metric());
    let k = vertex_values(&ops, k)?;
    let nb = ops.boundary_vertices().len();
    let kappa = opts.kappa;
    let sup = bm1_thresholds(&ops, kappa, &vec![0.0; nb], &opts.knobs)?;
    let k_max = k.iter().fold(0.0f64, |m, &x| m.max(x));
    let b = if k_max <= sup.k_threshold {
        1.0
    } else {
        opts.safety * sup.k_threshold / k_max
    };
    info!(
        "Gaussian prescription: C0 = {:.6e}, sup K+ = {k_max:.6e}, b = {b:.6e}",
        sup.k_threshold
    );
    let problem = SemilinearProblem {
        a: 0.0,
        kappa,
        k: k.iter().map(|k| b * k).collect(),
        c: 0.0,
        sigma: vec![0.0; nb],
        interior_affine: vec![0.0; ops.vertex_count()],
        boundary_affine: vec![0.0; nb],
    };
    let bracket = build_bracket_bm1(&ops, &problem, &opts.knobs)?;
    let (u, trace) = iterate(&problem, &ops, &bracket, &opts.iteration)?;
    let u = u.into_values();
    let sigma_g = model.sigma_g();
    let root = b.sqrt();
    let realized_sigma = ops
        .boundary_vertices()
        .iter()
        .map(|&v| (sigma_g - kappa * u[v]) * (-u[v]).exp() / root)
        .collect();
    finish(
        mesh,
        model,
        &ops,
        Outcome {
            pipeline: "prescribe-gaussian",
            u_model: u,
            scale: b,
            realized_k: k.to_vec(),
            realized_sigma,
            problem: &problem,
            residual_tol: opts.iteration.tol,
            thresholds: bracket.thresholds,
            parameters: Parameters {
                kappa: Some(kappa),
                b: Some(b),
                ..Default::default()
            },
            trace: Some(trace),
        },
        opts,
    )
}

/// Realizes `σ` as the geodesic curvature of `c² e^{2u} g` in a model with
/// geodesic boundary.
///
/// Solves `-Δu + Au = 0`, `∂u/∂ν = cσ e^{u}` with `c = 1` if `C₃ >= 1` and
/// `c = safety · C₃` otherwise. The Gaussian curvature is then
/// `c^{-2} (K_g - Au) e^{-2u}`.
pub fn prescribe_geodesic(
    mesh: &SurfaceMesh,
    model: &ModelForm,
    sigma: &ScalarField,
    opts: &PrescribeOptions,
) -> Result<PrescriptionResult, PrescribeError> {
    if model.sigma_g() != 0.0 {
        return Err(PrescribeError::Model(format!(
            "geodesic prescription needs a model with geodesic boundary, got {}",
            model.kind
        )));
    }
    let ops = EllipticOperators::assemble(mesh, model.metric());
    let sigma = boundary_values(&ops, sigma)?;
    let n = ops.vertex_count();
    let a = opts.a;
    let sup = bm2_thresholds(&ops, a, sigma, &opts.knobs)?;
    let c = if sup.c_threshold >= 1.0 {
        1.0
    } else {
        opts.safety * sup.c_threshold
    };
    info!(
        "geodesic prescription: C3 = {:.6e}, c = {c:.6e}",
        sup.c_threshold
    );
    let problem = SemilinearProblem {
        a,
        kappa: 0.0,
        k: vec![0.0; n],
        c,
        sigma: sigma.to_vec(),
        interior_affine: vec![0.0; n],
        boundary_affine: vec![0.0; sigma.len()],
    };
    let bracket = build_bracket_bm2(&ops, &problem, &opts.knobs)?;
    let (u, trace) = iterate(&problem, &ops, &bracket, &opts.iteration)?;
    let u = u.into_values();
    let k_g = model.k_g();
    let realized_k = u
        .iter()
        .map(|&u| (k_g - a * u) * (-2.0 * u).exp() / (c * c))
        .collect();
    finish(
        mesh,
        model,
        &ops,
        Outcome {
            pipeline: "prescribe-geodesic",
            u_model: u,
            scale: c * c,
            realized_k,
            realized_sigma: sigma.to_vec(),
            problem: &problem,
            residual_tol: opts.iteration.tol,
            thresholds: bracket.thresholds,
            parameters: Parameters {
                a: Some(a),
                c: Some(c),
                ..Default::default()
            },
            trace: Some(trace),
        },
        opts,
    )
}

/// Realizes `K < 0` and `cσ` (`σ > 0`) together on a χ = 0 flat model with
/// geodesic boundary, with `c = safety · D`.
pub fn prescribe_pair_chi0(
    mesh: &SurfaceMesh,
    model: &ModelForm,
    k: &ScalarField,
    sigma: &ScalarField,
    opts: &PrescribeOptions,
) -> Result<PrescriptionResult, PrescribeError> {
    if model.kind != ModelKind::FlatGeodesic {
        return Err(PrescribeError::Model(format!(
            "pair prescription needs the flat-geodesic model, got {}",
            model.kind
        )));
    }
    let ops = EllipticOperators::assemble(mesh, model.metric());
    let k = vertex_values(&ops, k)?;
    let sigma = boundary_values(&ops, sigma)?;
    let chi0 = build_bracket_chi0(&ops, k, sigma, &opts.knobs, &opts.iteration)?;
    let c = opts.safety * chi0.d;
    let (problem, bracket) = chi0.bracket_at(&ops, c)?;
    let (u, trace) = iterate(&problem, &ops, &bracket, &opts.iteration)?;
    finish(
        mesh,
        model,
        &ops,
        Outcome {
            pipeline: "prescribe-pair",
            u_model: u.into_values(),
            scale: 1.0,
            realized_k: k.to_vec(),
            realized_sigma: sigma.iter().map(|s| c * s).collect(),
            problem: &problem,
            residual_tol: opts.iteration.tol,
            thresholds: bracket.thresholds,
            parameters: Parameters {
                c: Some(c),
                ..Default::default()
            },
            trace: Some(trace),
        },
        opts,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Necessary conditions for realizing `(K, σ ≥ 0)` when χ < 0: the
/// solution of `-Δw = -2K`, `∂w/∂ν + 2w = 0` is positive and `∫K < 0`.
///
/// `Fail` certifies that the pair cannot be realized; `Pass` says nothing
/// about existence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub integral_k: f64,
    pub w_field: ScalarField,
    pub w_min: f64,
    pub verdict: Verdict,
    pub reasons: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn check_necessary_negative_chi(
    mesh: &SurfaceMesh,
    metric: &IntrinsicMetric,
    k: &ScalarField,
    sigma: &ScalarField,
) -> Result<FeasibilityReport, PrescribeError> {
    let chi = mesh.euler_characteristic();
    if chi >= 0 {
        return Err(PrescribeError::Precondition(format!(
            "the negative-χ check needs χ < 0, mesh has χ = {chi}"
        )));
    }
    let ops = EllipticOperators::assemble(mesh, metric);
    let kv = vertex_values(&ops, k)?;
    let sv = boundary_values(&ops, sigma)?;
    if let Some(s) = sv.iter().position(|&s| s < 0.0) {
        return Err(PrescribeError::Precondition(format!(
            "σ must be nonnegative; σ = {} at boundary vertex {}",
            sv[s],
            ops.boundary_vertices()[s]
        )));
    }
    let mut warnings = Vec::new();
    if !kv.iter().any(|&x| x > 0.0) || !kv.iter().any(|&x| x < 0.0) {
        warnings.push("K does not change sign; the check is meant for sign-changing K".to_string());
    }
    let minus_two_k = ScalarField::on_vertices(kv.iter().map(|k| -2.0 * k).collect())?;
    let nb = sv.len();
    let two = ScalarField::on_boundary(vec![2.0; nb])?;
    let zero = ScalarField::on_boundary(vec![0.0; nb])?;
    let (w, _) = solve_robin(&RobinProblem {
        operators: &ops,
        robin_coefficient: two,
        interior_rhs: minus_two_k,
        boundary_rhs: zero,
    })?;
    let integral_k = ops.integrate(kv);
    let w_min = w.min();
    let mut reasons = Vec::new();
    if integral_k >= 0.0 {
        reasons.push(format!("integral_K >= 0 ({integral_k:.6e})"));
    }
    if w_min <= 0.0 {
        reasons.push(format!("w is not positive (min {w_min:.6e})"));
    }
    let verdict = if reasons.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(FeasibilityReport {
        integral_k,
        w_field: w,
        w_min,
        verdict,
        reasons,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldDomain;
    use crate::mesh::LoadedMesh;
    use crate::prescribe::{ModelChoice, UniformizeOptions};
    use curvforge_testmesh as tm;

    fn load(m: tm::MeshData) -> LoadedMesh {
        LoadedMesh::from_positions(m.positions, m.triangles).unwrap()
    }

    #[test]
    fn zero_gaussian_data_on_flat_geodesic_model() {
        let d = load(tm::annulus_level(0));
        let model =
            ModelForm::uniformize(&d.mesh, &d.metric, &UniformizeOptions::default()).unwrap();
        let k = ScalarField::constant(&d.mesh, FieldDomain::Vertices, 0.0);
        let r = prescribe_gaussian(&d.mesh, &model, &k, &PrescribeOptions::default()).unwrap();
        assert_eq!(r.metric_scale, 1.0);
        let base = model.base_u();
        for (u, b) in r.u.values().iter().zip(base) {
            assert!((u - b).abs() < 1e-9);
        }
        assert!(r.realized_sigma.values().iter().all(|s| s.abs() < 1e-9));
        assert!(r.report.passed(), "{:?}", r.report);
    }

    #[test]
    fn zero_gaussian_data_on_flat_unit_disk() {
        let d = load(tm::delaunay_disk(0.2));
        let model = ModelForm::resolve(
            ModelChoice::Auto,
            &d.mesh,
            &d.metric,
            crate::prescribe::BoundaryPreference::Flat,
        )
        .unwrap();
        assert_eq!(model.kind, ModelKind::FlatUnit);
        let k = ScalarField::constant(&d.mesh, FieldDomain::Vertices, 0.0);
        let r = prescribe_gaussian(&d.mesh, &model, &k, &PrescribeOptions::default()).unwrap();
        assert!(r.u.values().iter().all(|u| u.abs() < 1e-9));
        assert!(r
            .realized_sigma
            .values()
            .iter()
            .all(|s| (s - 1.0).abs() < 1e-9));
    }

    #[test]
    fn geodesic_formula_identity() {
        let d = load(tm::annulus_level(0));
        let model =
            ModelForm::uniformize(&d.mesh, &d.metric, &UniformizeOptions::default()).unwrap();
        let nb = d.mesh.boundary_vertices().len();
        let sigma =
            ScalarField::on_boundary((0..nb).map(|s| (s as f64 * 0.3).sin()).collect()).unwrap();
        let opts = PrescribeOptions::default();
        let r = prescribe_geodesic(&d.mesh, &model, &sigma, &opts).unwrap();
        let c = r.parameters.c.unwrap();
        for ((k, u), b) in r
            .realized_k
            .values()
            .iter()
            .zip(r.u.values())
            .zip(model.base_u())
        {
            let um = u - b;
            let expected = -um * (-2.0 * um).exp() / (c * c);
            assert!((k - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn pair_requires_positive_sigma() {
        let d = load(tm::annulus_level(0));
        let model =
            ModelForm::uniformize(&d.mesh, &d.metric, &UniformizeOptions::default()).unwrap();
        let k = ScalarField::constant(&d.mesh, FieldDomain::Vertices, -1.0);
        let s = ScalarField::constant(&d.mesh, FieldDomain::Boundary, 0.0);
        assert!(matches!(
            prescribe_pair_chi0(&d.mesh, &model, &k, &s, &PrescribeOptions::default()),
            Err(PrescribeError::Monotone(_))
        ));
    }

    #[test]
    fn feasibility_rejects_positive_integral() {
        let d = load(tm::pair_of_pants(0.3));
        let k = ScalarField::constant(&d.mesh, FieldDomain::Vertices, 1.0);
        let s = ScalarField::constant(&d.mesh, FieldDomain::Boundary, 0.0);
        let r = check_necessary_negative_chi(&d.mesh, &d.metric, &k, &s).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.reasons[0].starts_with("integral_K"));
        let k = ScalarField::constant(&d.mesh, FieldDomain::Vertices, -1.0);
        let r = check_necessary_negative_chi(&d.mesh, &d.metric, &k, &s).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.w_min > 0.0);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn feasibility_needs_negative_chi() {
        let d = load(tm::disk(3));
        let k = ScalarField::constant(&d.mesh, FieldDomain::Vertices, -1.0);
        let s = ScalarField::constant(&d.mesh, FieldDomain::Boundary, 0.0);
        assert!(check_necessary_negative_chi(&d.mesh, &d.metric, &k, &s).is_err());
    }
}
