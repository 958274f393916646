use std::fs;
use std::path::Path;

use curvforge::elliptic::EllipticOperators;
use curvforge::field::FieldSource;
use curvforge::mesh::{load_mesh, LoadedMesh};
use curvforge::prescribe::{
    check_necessary_negative_chi, construct_example_pair, prescribe_gaussian, prescribe_geodesic,
    prescribe_pair_chi0, BoundaryPreference, ExampleCase, ModelChoice, ModelForm, PrescribeError,
    PrescribeOptions, PrescriptionResult,
};
use curvforge::report::{
    write_fields_csv, Column, ExampleSection, PrescriptionSection, Report, UniformizeSection,
};
use curvforge::verify::{self, Check, VerificationReport};
use curvforge::ScalarField;
use thiserror::Error;

use crate::{Command, Common};

const GAUSS_BONNET_TOL: f64 = 1e-9;
const UNIFORMIZE_ANGLE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    /// The computation ran but could not produce a verified result.
    #[error("{0}")]
    Verification(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl From<PrescribeError> for CliError {
    fn from(e: PrescribeError) -> Self {
        match e {
            PrescribeError::Solve(_) | PrescribeError::Monotone(_) => {
                CliError::Verification(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

struct Context {
    loaded: LoadedMesh,
    opts: PrescribeOptions,
}

impl Context {
    fn open(common: &Common) -> Result<Self, CliError> {
        let loaded = load_mesh(&common.mesh, None)
            .map_err(|e| CliError::Input(format!("{}: {e}", common.mesh.display())))?;
        for w in &loaded.warnings {
            log::warn!("{}: {w}", common.mesh.display());
        }
        let mut opts = PrescribeOptions::default();
        if let Some(tol) = common.tol {
            if !(tol > 0.0) {
                return Err(CliError::Input(format!(
                    "--tol must be positive, got {tol}"
                )));
            }
            opts.iteration.tol = tol;
        }
        if let Some(n) = common.max_iters {
            if n == 0 {
                return Err(CliError::Input("--max-iters must be positive".into()));
            }
            opts.iteration.max_iters = n;
        }
        Ok(Self { loaded, opts })
    }

    fn vertex_field(&self, arg: &str) -> Result<ScalarField, CliError> {
        FieldSource::from_arg(arg)
            .vertex_field(&self.loaded.positions)
            .map_err(input)
    }

    fn boundary_field(&self, arg: &str) -> Result<ScalarField, CliError> {
        FieldSource::from_arg(arg)
            .boundary_field(&self.loaded.mesh, &self.loaded.positions)
            .map_err(input)
    }

    fn model(
        &self,
        common: &Common,
        default: ModelChoice,
        preference: BoundaryPreference,
    ) -> Result<ModelForm, CliError> {
        let choice = match &common.model {
            Some(s) => s.parse::<ModelChoice>().map_err(CliError::Input)?,
            None => default,
        };
        Ok(ModelForm::resolve(
            choice,
            &self.loaded.mesh,
            &self.loaded.metric,
            preference,
        )?)
    }

    fn report(&self, command: &str, common: &Common, verification: VerificationReport) -> Report {
        Report::new(command, &self.loaded.mesh, verification)
            .input("mesh", common.mesh.display())
            .input("seed", common.seed)
            .input("tol", self.opts.iteration.tol)
            .input("max_iters", self.opts.iteration.max_iters)
    }
}

/// Runs one command; `Ok(passed)` once the report is written.
pub fn run(command: Command) -> Result<bool, CliError> {
    let (common, report, fields, mesh) = match command {
        Command::PrescribeGaussian { common, k, kappa } => {
            let mut ctx = Context::open(&common)?;
            if !(kappa > 0.0) {
                return Err(CliError::Input(format!(
                    "--kappa must be positive, got {kappa}"
                )));
            }
            ctx.opts.kappa = kappa;
            let model = ctx.model(&common, ModelChoice::Auto, BoundaryPreference::Flat)?;
            let kf = ctx.vertex_field(&k)?;
            let r = prescribe_gaussian(&ctx.loaded.mesh, &model, &kf, &ctx.opts)?;
            let report = prescription_report(&ctx, "prescribe-gaussian", &common, &r)
                .input("K", FieldSource::from_arg(&k).describe())
                .input("kappa", kappa);
            (common, report, Some(result_fields(&r)), ctx.loaded.mesh)
        }
        Command::PrescribeGeodesic { common, sigma, a } => {
            let mut ctx = Context::open(&common)?;
            if !(a > 0.0) {
                return Err(CliError::Input(format!("--A must be positive, got {a}")));
            }
            ctx.opts.a = a;
            let model = ctx.model(&common, ModelChoice::Auto, BoundaryPreference::Geodesic)?;
            let sf = ctx.boundary_field(&sigma)?;
            let r = prescribe_geodesic(&ctx.loaded.mesh, &model, &sf, &ctx.opts)?;
            let report = prescription_report(&ctx, "prescribe-geodesic", &common, &r)
                .input("sigma", FieldSource::from_arg(&sigma).describe())
                .input("A", a);
            (common, report, Some(result_fields(&r)), ctx.loaded.mesh)
        }
        Command::PrescribePair { common, k, sigma } => {
            let ctx = Context::open(&common)?;
            let model = ctx.model(&common, ModelChoice::Uniformize, BoundaryPreference::Flat)?;
            let kf = ctx.vertex_field(&k)?;
            let sf = ctx.boundary_field(&sigma)?;
            let r = prescribe_pair_chi0(&ctx.loaded.mesh, &model, &kf, &sf, &ctx.opts)?;
            let report = prescription_report(&ctx, "prescribe-pair", &common, &r)
                .input("K", FieldSource::from_arg(&k).describe())
                .input("sigma", FieldSource::from_arg(&sigma).describe());
            (common, report, Some(result_fields(&r)), ctx.loaded.mesh)
        }
        Command::CheckFeasibility { common, k, sigma } => {
            let ctx = Context::open(&common)?;
            let kf = ctx.vertex_field(&k)?;
            let sf = ctx.boundary_field(&sigma)?;
            let (mesh, metric) = (&ctx.loaded.mesh, &ctx.loaded.metric);
            let f = check_necessary_negative_chi(mesh, metric, &kf, &sf)?;
            for w in &f.warnings {
                log::warn!("{w}");
            }
            for r in &f.reasons {
                eprintln!("infeasible: {r}");
            }
            let verification = metric_verification(&ctx);
            let mut fields = Fields::default();
            fields
                .vertex
                .push(("w".into(), f.w_field.values().to_vec()));
            let mut report = ctx
                .report("check-feasibility", &common, verification)
                .input("K", FieldSource::from_arg(&k).describe())
                .input("sigma", FieldSource::from_arg(&sigma).describe());
            report.feasibility = Some(f);
            (common, report, Some(fields), ctx.loaded.mesh)
        }
        Command::MakeExample { common, case } => {
            let ctx = Context::open(&common)?;
            let case: ExampleCase = case.parse().map_err(CliError::Input)?;
            let default = match case {
                ExampleCase::Chi0 => ModelChoice::Uniformize,
                c => ModelChoice::Declared(c.required_model()),
            };
            let model = ctx.model(&common, default, BoundaryPreference::Flat)?;
            let pair = construct_example_pair(&ctx.loaded.mesh, &model, case, &ctx.opts)?;
            for c in pair.sign_checks.iter().filter(|c| !c.holds) {
                eprintln!("sign pattern {:?} fails for {}", c.pattern, c.field);
            }
            let mut report = prescription_report(&ctx, "make-example", &common, &pair.result)
                .input("case", case);
            report.example = Some(ExampleSection::from(&pair));
            let mut fields = result_fields(&pair.result);
            fields.vertex.push(("f".into(), pair.interior_data.clone()));
            fields
                .boundary
                .push(("g".into(), pair.boundary_data.clone()));
            (common, report, Some(fields), ctx.loaded.mesh)
        }
        Command::Uniformize { common } => {
            let ctx = Context::open(&common)?;
            let model = ctx.model(&common, ModelChoice::Uniformize, BoundaryPreference::Flat)?;
            let mut verification = VerificationReport {
                gauss_bonnet_residual: verify::gauss_bonnet_residual(
                    &ctx.loaded.mesh,
                    model.metric(),
                ),
                ..Default::default()
            };
            verification.checks.push(Check::at_most(
                "gauss_bonnet",
                verification.gauss_bonnet_residual.abs(),
                GAUSS_BONNET_TOL,
            ));
            if let Some(info) = &model.uniformize_info {
                verification.checks.push(Check::at_most(
                    "max_angle_defect",
                    info.final_max_angle,
                    UNIFORMIZE_ANGLE_TOL,
                ));
            }
            verification.checks.push(Check::at_most(
                "model_deviation",
                model.deviation,
                model.tolerance,
            ));
            let mut report = ctx.report("uniformize", &common, verification);
            report.uniformize = Some(UniformizeSection::from(&model));
            let mut fields = Fields::default();
            fields.vertex.push(("u".into(), model.base_u().to_vec()));
            (common, report, Some(fields), ctx.loaded.mesh)
        }
        Command::Verify {
            common,
            u,
            scale,
            k,
            sigma,
            kappa,
            trials,
        } => {
            let ctx = Context::open(&common)?;
            if !(scale > 0.0) || !(kappa > 0.0) {
                return Err(CliError::Input(
                    "--scale and --kappa must be positive".into(),
                ));
            }
            let (mesh, metric) = (&ctx.loaded.mesh, &ctx.loaded.metric);
            let uf = match &u {
                Some(arg) => ctx.vertex_field(arg)?.into_values(),
                None => vec![0.0; mesh.vertex_count()],
            };
            let rescaled = metric.rescale(mesh, &uf, scale).map_err(input)?;
            let mut verification = VerificationReport {
                gauss_bonnet_residual: verify::gauss_bonnet_residual(mesh, &rescaled),
                ..Default::default()
            };
            verification.checks.push(Check::at_most(
                "gauss_bonnet",
                verification.gauss_bonnet_residual.abs(),
                GAUSS_BONNET_TOL,
            ));
            let ops = EllipticOperators::assemble(mesh, &rescaled);
            let probe = verify::maximum_principle_probe(&ops, kappa, trials, common.seed)
                .map_err(|e| CliError::Verification(e.to_string()))?;
            verification.maxprin_applicable = probe.applicable;
            for v in &probe.variants {
                verification.checks.push(Check::at_most(
                    format!("maximum_principle_{}", v.name),
                    v.failures as f64,
                    0.0,
                ));
            }
            if let (Some(k), Some(s)) = (&k, &sigma) {
                let kv = ctx.vertex_field(k)?.into_values();
                let sv = ctx.boundary_field(s)?.into_values();
                let e = verify::curvature_errors(mesh, &rescaled, &kv, &sv);
                let (ri, rb) = e.rms();
                let tol = ctx.opts.curvature_tol;
                let rms = |v: &[f64], w: f64| (v.iter().map(|x| x * x).sum::<f64>() / w).sqrt();
                let ti = tol * rms(&kv, kv.len() as f64).max(1.0);
                let tb = tol * rms(&sv, sv.len() as f64).max(1.0);
                verification
                    .checks
                    .push(Check::at_most("curvature_interior_rms", ri, ti));
                verification
                    .checks
                    .push(Check::at_most("curvature_boundary_rms", rb, tb));
                verification.curvature = Some(e);
            } else if k.is_some() || sigma.is_some() {
                return Err(CliError::Input(
                    "--K and --sigma must be given together".into(),
                ));
            }
            let mut report = ctx
                .report("verify", &common, verification)
                .input("scale", scale)
                .input("kappa", kappa)
                .input("trials", trials);
            if let Some(u) = &u {
                report = report.input("u", FieldSource::from_arg(u).describe());
            }
            report.maximum_principle = Some(probe);
            let mut fields = Fields::default();
            fields.vertex.push(("u".into(), uf));
            (common, report, Some(fields), ctx.loaded.mesh)
        }
    };

    let mut report = report.settle();
    report.timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    fs::create_dir_all(&common.out).map_err(|source| CliError::Io {
        path: common.out.display().to_string(),
        source,
    })?;
    write(&common.out.join("report.json"), report.to_json().as_bytes())?;
    if common.fields {
        if let Some(fields) = fields {
            let mut buf = Vec::new();
            let mut columns: Vec<Column<'_>> = fields
                .vertex
                .iter()
                .map(|(n, v)| Column::Vertices(n, v))
                .collect();
            columns.extend(fields.boundary.iter().map(|(n, v)| Column::Boundary(n, v)));
            write_fields_csv(&mut buf, &mesh, &columns).map_err(input)?;
            write(&common.out.join("fields.csv"), &buf)?;
        }
    }
    for c in report.verification.failures() {
        eprintln!(
            "check {} failed: {:.3e} > {:.3e}",
            c.name, c.value, c.tolerance
        );
    }
    Ok(report.passed())
}

#[derive(Default)]
struct Fields {
    vertex: Vec<(String, Vec<f64>)>,
    boundary: Vec<(String, Vec<f64>)>,
}

fn result_fields(r: &PrescriptionResult) -> Fields {
    Fields {
        vertex: vec![
            ("u".into(), r.u.values().to_vec()),
            ("K".into(), r.realized_k.values().to_vec()),
        ],
        boundary: vec![("sigma".into(), r.realized_sigma.values().to_vec())],
    }
}

fn prescription_report(
    ctx: &Context,
    command: &str,
    common: &Common,
    r: &PrescriptionResult,
) -> Report {
    let mut report = ctx
        .report(command, common, r.report.clone())
        .input("model", r.model.kind);
    report.prescription = Some(PrescriptionSection::from(r));
    report
}

fn metric_verification(ctx: &Context) -> VerificationReport {
    let gb = verify::gauss_bonnet_residual(&ctx.loaded.mesh, &ctx.loaded.metric);
    VerificationReport {
        gauss_bonnet_residual: gb,
        checks: vec![Check::at_most("gauss_bonnet", gb.abs(), GAUSS_BONNET_TOL)],
        ..Default::default()
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}
