use curvforge::mesh::LoadedMesh;
use curvforge::prescribe::{
    check_necessary_negative_chi, construct_example_pair, prescribe_gaussian, prescribe_geodesic,
    prescribe_pair_chi0, ExampleCase, ModelForm, ModelKind, PrescribeOptions, UniformizeOptions,
    Verdict,
};
use curvforge::verify::conformal_rescale_verify;
use curvforge::{Report, ScalarField, VerificationReport};
use curvforge_testmesh as tm;

fn load(m: tm::MeshData) -> LoadedMesh {
    LoadedMesh::from_positions(m.positions, m.triangles).unwrap()
}

fn annulus_model(level: u32) -> (LoadedMesh, ModelForm) {
    let d = load(tm::annulus_level(level));
    let model = ModelForm::uniformize(&d.mesh, &d.metric, &UniformizeOptions::default()).unwrap();
    (d, model)
}

#[test]
fn gaussian_result_rescales_to_its_own_curvature() {
    let (d, model) = annulus_model(1);
    let k: Vec<f64> = d.positions.iter().map(|p| 2.0 * p[0] + 0.5).collect();
    let opts = PrescribeOptions::default();
    let r = prescribe_gaussian(
        &d.mesh,
        &model,
        &ScalarField::on_vertices(k.clone()).unwrap(),
        &opts,
    )
    .unwrap();
    assert!(r.report.passed(), "{:?}", r.report.failures());
    assert!(r.trace.as_ref().unwrap().all_monotone());
    // independent re-check from the input metric
    let e = conformal_rescale_verify(
        &d.mesh,
        &d.metric,
        r.u.values(),
        r.metric_scale,
        &k,
        r.realized_sigma.values(),
    )
    .unwrap();
    assert!(e.interior_l2_relative < 2e-3, "{e:?}");
    assert!(e.boundary_l2_relative < 2e-3, "{e:?}");
}

#[test]
fn large_positive_curvature_is_scaled_down() {
    let d = load(tm::disk(6));
    let model = ModelForm::declare(&d.mesh, &d.metric, ModelKind::FlatUnit).unwrap();
    let k = ScalarField::on_vertices(vec![50.0; d.mesh.vertex_count()]).unwrap();
    let r = prescribe_gaussian(&d.mesh, &model, &k, &PrescribeOptions::default()).unwrap();
    let b = r.parameters.b.unwrap();
    assert!(b < 1.0 && b > 0.0);
    assert!(r.report.passed(), "{:?}", r.report.failures());
}

#[test]
fn geodesic_and_pair_pipelines_converge() {
    let (d, model) = annulus_model(1);
    let opts = PrescribeOptions::default();
    let sigma: Vec<f64> = d
        .mesh
        .boundary_vertices()
        .iter()
        .map(|&v| d.positions[v][1] - 0.25)
        .collect();
    let r = prescribe_geodesic(
        &d.mesh,
        &model,
        &ScalarField::on_boundary(sigma).unwrap(),
        &opts,
    )
    .unwrap();
    assert!(r.report.passed(), "{:?}", r.report.failures());

    let n = d.mesh.vertex_count();
    let nb = d.mesh.boundary_vertices().len();
    let k: Vec<f64> = d.positions.iter().map(|p| -1.0 - p[0] * p[0]).collect();
    let r = prescribe_pair_chi0(
        &d.mesh,
        &model,
        &ScalarField::on_vertices(k).unwrap(),
        &ScalarField::on_boundary(vec![0.7; nb]).unwrap(),
        &opts,
    )
    .unwrap();
    assert!(r.report.passed(), "{:?}", r.report.failures());
    assert_eq!(r.u.len(), n);
    let c = r.parameters.c.unwrap();
    assert!(r
        .realized_sigma
        .values()
        .iter()
        .all(|&s| (s - 0.7 * c).abs() < 1e-15));
}

#[test]
fn feasibility_verdicts() {
    let d = load(tm::pair_of_pants(0.25));
    let n = d.mesh.vertex_count();
    let nb = d.mesh.boundary_vertices().len();
    let sigma = ScalarField::on_boundary(vec![0.0; nb]).unwrap();
    let pos = check_necessary_negative_chi(
        &d.mesh,
        &d.metric,
        &ScalarField::on_vertices(vec![1.0; n]).unwrap(),
        &sigma,
    )
    .unwrap();
    assert_eq!(pos.verdict, Verdict::Fail);
    let neg = check_necessary_negative_chi(
        &d.mesh,
        &d.metric,
        &ScalarField::on_vertices(vec![-1.0; n]).unwrap(),
        &sigma,
    )
    .unwrap();
    assert_eq!(neg.verdict, Verdict::Pass, "{:?}", neg.reasons);
    assert!(neg.w_min > 0.0);
}

#[test]
fn curved_example_on_hemisphere() {
    let d = load(tm::hemisphere(6));
    let model = ModelForm::declare(&d.mesh, &d.metric, ModelKind::CurvedUnit).unwrap();
    for case in [ExampleCase::Positive(4), ExampleCase::Positive(7)] {
        let pair =
            construct_example_pair(&d.mesh, &model, case, &PrescribeOptions::default()).unwrap();
        assert!(pair.all_hold(), "{case}: {:?}", pair.sign_checks);
    }
}

#[test]
fn report_serializes_sections() {
    let d = load(tm::disk(3));
    let report = Report::new(
        "verify",
        &d.mesh,
        VerificationReport {
            gauss_bonnet_residual: 0.0,
            pde_residual_sup: 0.0,
            boundary_residual_sup: 0.0,
            maxprin_applicable: true,
            checks: Vec::new(),
            curvature: None,
        },
    )
    .input("mesh", "disk.off")
    .settle();
    assert!(report.passed());
    let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["status"], "pass");
    assert_eq!(v["mesh"]["euler_characteristic"], 1);
    assert!(v.get("prescription").is_none());
}
