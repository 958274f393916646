use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::pipelines::{finish, Outcome};
use super::{
    ModelForm, ModelKind, Parameters, PrescribeError, PrescribeOptions, PrescriptionResult,
};
use crate::elliptic::{EllipticOperators, NeumannOptions, NeumannSolver, SolveError};
use crate::field::ScalarField;
use crate::mesh::SurfaceMesh;
use crate::monotone::{SemilinearProblem, Thresholds};
use crate::verify::Check;

/// Which example pair to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExampleCase {
    /// Cases 1 to 8 on a χ > 0 model.
    Positive(u8),
    /// `K > 0`, `σ < 0` on a χ = 0 model.
    Chi0,
}

impl ExampleCase {
    pub fn all() -> Vec<ExampleCase> {
        let mut v: Vec<_> = (1..=8).map(ExampleCase::Positive).collect();
        v.push(ExampleCase::Chi0);
        v
    }

    pub fn required_model(self) -> ModelKind {
        match self {
            ExampleCase::Positive(4 | 5 | 7) => ModelKind::CurvedUnit,
            ExampleCase::Positive(_) => ModelKind::FlatUnit,
            ExampleCase::Chi0 => ModelKind::FlatGeodesic,
        }
    }

    /// Declared sign patterns of `(K, σ)`.
    pub fn patterns(self) -> (SignPattern, SignPattern) {
        use SignPattern::*;
        match self {
            ExampleCase::Positive(1) => (Nonnegative, Nonnegative),
            ExampleCase::Positive(2) => (ChangesSign, Nonnegative),
            ExampleCase::Positive(3) => (Nonpositive, Nonnegative),
            ExampleCase::Positive(4) => (Nonnegative, ChangesSign),
            ExampleCase::Positive(5) => (Nonnegative, Nonpositive),
            ExampleCase::Positive(6) => (ChangesSign, ChangesSign),
            ExampleCase::Positive(7) => (Nonpositive, ChangesSign),
            ExampleCase::Positive(_) => (ChangesSign, Nonpositive),
            ExampleCase::Chi0 => (Positive, Negative),
        }
    }
}

impl fmt::Display for ExampleCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExampleCase::Positive(i) => write!(f, "{i}"),
            ExampleCase::Chi0 => f.write_str("chi0"),
        }
    }
}

impl FromStr for ExampleCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chi0" => Ok(ExampleCase::Chi0),
            _ => match s.parse::<u8>() {
                Ok(i @ 1..=8) => Ok(ExampleCase::Positive(i)),
                _ => Err(format!("unknown case '{s}' (expected 1..8 or chi0)")),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPattern {
    Nonnegative,
    Nonpositive,
    Positive,
    Negative,
    ChangesSign,
}

impl SignPattern {
    /// Vertexwise test; the weak patterns also require a nonzero entry.
    pub fn holds(self, values: &[f64]) -> bool {
        let any_pos = values.iter().any(|&x| x > 0.0);
        let any_neg = values.iter().any(|&x| x < 0.0);
        match self {
            SignPattern::Nonnegative => any_pos && !any_neg,
            SignPattern::Nonpositive => any_neg && !any_pos,
            SignPattern::Positive => values.iter().all(|&x| x > 0.0),
            SignPattern::Negative => values.iter().all(|&x| x < 0.0),
            SignPattern::ChangesSign => any_pos && any_neg,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignCheck {
    pub field: &'static str,
    pub pattern: SignPattern,
    pub holds: bool,
    pub min: f64,
    pub max: f64,
}

/// A constructed pair and the linear data it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct ExamplePair {
    pub case: ExampleCase,
    pub k: ScalarField,
    pub sigma: ScalarField,
    /// Interior and boundary data of `-Δu = f`, `∂u/∂ν = g`.
    pub interior_data: Vec<f64>,
    pub boundary_data: Vec<f64>,
    /// Named bounds that the case requires, as `(name, value, satisfied)`.
    pub constants: Vec<(String, f64, bool)>,
    pub sign_checks: Vec<SignCheck>,
    pub result: PrescriptionResult,
}

impl ExamplePair {
    pub fn all_hold(&self) -> bool {
        self.sign_checks.iter().all(|c| c.holds) && self.constants.iter().all(|c| c.2)
    }
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Mean-zero eigenvector of `S v = λ M v` for the smallest nonzero `λ`, by
/// inverse iteration on the Neumann problem, normalized to `sup |v| = 1`.
/// The start vector is drawn from a fixed seed.
pub fn first_neumann_eigenvector(ops: &EllipticOperators) -> Result<Vec<f64>, SolveError> {
    let solver = NeumannSolver::new(ops)?;
    let nb = ops.boundary_vertices().len();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..ops.vertex_count())
        .map(|_| rng.random::<f64>() - 0.5)
        .collect();
    let opts = NeumannOptions {
        project: true,
        ..Default::default()
    };
    let zero = vec![0.0; nb];
    for _ in 0..200 {
        let (next, _, _) = solver.solve(&v, &zero, opts)?;
        let s = sup_abs(&next);
        let next: Vec<f64> = next.iter().map(|x| x / s).collect();
        let change = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if change < 1e-10 {
            break;
        }
    }
    Ok(v)
}

/// Builds the example pair for `case` from a compatible Neumann problem
/// `-Δu = f`, `∂u/∂ν = g` on the model metric:
///
/// ```text
/// K = (f + K_g) e^{-2u},   σ = (g + σ_g) e^{-u}
/// ```
///
/// Data come from the first nonconstant Neumann eigenvector `φ` (which
/// changes sign) and are scaled so that the constant forced by
/// compatibility meets the case's bound.
pub fn construct_example_pair(
    mesh: &SurfaceMesh,
    model: &ModelForm,
    case: ExampleCase,
    opts: &PrescribeOptions,
) -> Result<ExamplePair, PrescribeError> {
    let required = case.required_model();
    if model.kind != required {
        return Err(PrescribeError::Model(format!(
            "case {case} needs model {required}, got {}",
            model.kind
        )));
    }
    let ops = EllipticOperators::assemble(mesh, model.metric());
    let n = ops.vertex_count();
    let nb = ops.boundary_vertices().len();
    let vol = ops.volume();
    let blen = ops.boundary_length();
    let phi = first_neumann_eigenvector(&ops)?;
    let phi_b = ops.restrict_to_boundary(&phi);
    // sign-changing boundary field with zero boundary integral and sup 1
    let hat = {
        let mean = ops.integrate_boundary(&phi_b) / blen;
        let centred: Vec<f64> = phi_b.iter().map(|x| x - mean).collect();
        let s = sup_abs(&centred);
        if !(s > 0.0) {
            return Err(PrescribeError::Example(
                "eigenvector is constant on the boundary".into(),
            ));
        }
        centred.into_iter().map(|x| x / s).collect::<Vec<f64>>()
    };
    let phi_min = phi.iter().copied().fold(f64::INFINITY, f64::min);
    if !(phi_min < 0.0) {
        return Err(PrescribeError::Example(
            "eigenvector does not change sign".into(),
        ));
    }
    let one_plus_phi: Vec<f64> = phi.iter().map(|p| 1.0 + p).collect();
    let one_plus_phi_b: Vec<f64> = phi_b.iter().map(|p| 1.0 + p).collect();
    // positive mean P/Vol plus a sign-changing part dominating it
    let dominated = |p: f64| -> Vec<f64> {
        let s = 2.0 * p / (vol * phi_min.abs());
        phi.iter().map(|x| p / vol + s * x).collect()
    };

    let mut constants = Vec::new();
    let (f, g): (Vec<f64>, Vec<f64>) = match case {
        ExampleCase::Positive(i @ 1..=3) => {
            let (f, a) = match i {
                1 | 3 => {
                    let sign = if i == 1 { 1.0 } else { -1.0 };
                    let t = 0.5 * blen / ops.integrate(&one_plus_phi);
                    let f: Vec<f64> = one_plus_phi.iter().map(|x| sign * t * x).collect();
                    let a = -ops.integrate(&f) / blen;
                    (f, a)
                }
                _ => {
                    let f = phi.clone();
                    let a = -ops.integrate(&f) / blen;
                    (f, a)
                }
            };
            constants.push((format!("A{i}"), a, a.abs() < 1.0));
            (f, vec![a; nb])
        }
        ExampleCase::Positive(i @ (4 | 5)) => {
            let h: Vec<f64> = if i == 4 {
                let b = -ops.integrate_boundary(&hat) / vol;
                let t = if b.abs() > 0.5 { 0.5 / b.abs() } else { 1.0 };
                hat.iter().map(|x| t * x).collect()
            } else {
                let t = 0.5 * vol / ops.integrate_boundary(&one_plus_phi_b);
                one_plus_phi_b.iter().map(|x| -t * x).collect()
            };
            let b = -ops.integrate_boundary(&h) / vol;
            constants.push((format!("B{i}"), b, b.abs() < 1.0));
            (vec![b; n], h)
        }
        ExampleCase::Positive(6) => {
            let g: Vec<f64> = hat.iter().map(|x| -1.0 + 0.25 * x).collect();
            let f = dominated(-ops.integrate_boundary(&g));
            let (lo, hi) = min_max(&g);
            constants.push(("F6'_min".into(), lo, lo > -1.5));
            constants.push(("F6'_max".into(), hi, hi < -0.5));
            (f, g)
        }
        ExampleCase::Positive(7) => {
            let m = 1.5 * vol / blen;
            let hat_min = hat.iter().copied().fold(f64::INFINITY, f64::min);
            let s = 2.0 * m / hat_min.abs();
            let g: Vec<f64> = hat.iter().map(|x| m + s * x).collect();
            let f = vec![-1.5; n];
            let (_, hi) = min_max(&f);
            constants.push(("F7_max".into(), hi, hi < -1.0));
            (f, g)
        }
        ExampleCase::Positive(_) => {
            let g = vec![-1.5; nb];
            let f = dominated(1.5 * blen);
            let (_, hi) = min_max(&g);
            constants.push(("F8'_max".into(), hi, hi < -1.0));
            (f, g)
        }
        ExampleCase::Chi0 => {
            let b2 = -vol / blen;
            constants.push(("b1".into(), 1.0, true));
            constants.push(("b2".into(), b2, b2 < 0.0));
            (vec![1.0; n], vec![b2; nb])
        }
    };
    let (u, _, _) = NeumannSolver::new(&ops)?.solve(&f, &g, NeumannOptions::default())?;
    let (k_g, sigma_g) = model.kind.constants();
    let k: Vec<f64> = f
        .iter()
        .zip(&u)
        .map(|(f, u)| (f + k_g) * (-2.0 * u).exp())
        .collect();
    let sigma: Vec<f64> = g
        .iter()
        .zip(ops.boundary_vertices())
        .map(|(g, &v)| (g + sigma_g) * (-u[v]).exp())
        .collect();

    let (kp, sp) = case.patterns();
    let sign_checks = vec![sign_check("K", kp, &k), sign_check("sigma", sp, &sigma)];

    let problem = SemilinearProblem {
        a: 0.0,
        kappa: 0.0,
        k: k.clone(),
        c: 1.0,
        sigma: sigma.clone(),
        interior_affine: vec![k_g; n],
        boundary_affine: vec![sigma_g; nb],
    };
    let mut result = finish(
        mesh,
        model,
        &ops,
        Outcome {
            pipeline: "make-example",
            u_model: u.clone(),
            scale: 1.0,
            realized_k: k.clone(),
            realized_sigma: sigma.clone(),
            problem: &problem,
            residual_tol: 1e-8,
            thresholds: Thresholds::default(),
            parameters: Parameters::default(),
            trace: None,
        },
        opts,
    )?;
    for c in &sign_checks {
        result.report.checks.push(Check {
            name: format!("sign_{}_{}", c.field, pattern_name(c.pattern)),
            passed: c.holds,
            value: if c.holds { 0.0 } else { 1.0 },
            tolerance: 0.0,
        });
    }
    for (name, value, ok) in &constants {
        result.report.checks.push(Check {
            name: format!("bound_{name}"),
            passed: *ok,
            value: *value,
            tolerance: bound_of(name),
        });
    }
    Ok(ExamplePair {
        case,
        k: ScalarField::on_vertices(k)?,
        sigma: ScalarField::on_boundary(sigma)?,
        interior_data: f,
        boundary_data: g,
        constants,
        sign_checks,
        result,
    })
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

fn sign_check(field: &'static str, pattern: SignPattern, values: &[f64]) -> SignCheck {
    let (min, max) = min_max(values);
    SignCheck {
        field,
        pattern,
        holds: pattern.holds(values),
        min,
        max,
    }
}

fn pattern_name(p: SignPattern) -> &'static str {
    match p {
        SignPattern::Nonnegative => "nonnegative",
        SignPattern::Nonpositive => "nonpositive",
        SignPattern::Positive => "positive",
        SignPattern::Negative => "negative",
        SignPattern::ChangesSign => "changes_sign",
    }
}

/// The limit each named constant is compared against.
fn bound_of(name: &str) -> f64 {
    match name {
        "F6'_min" => -1.5,
        "F6'_max" => -0.5,
        "F7_max" | "F8'_max" => -1.0,
        "b1" | "b2" => 0.0,
        _ => 1.0,
    }
}
