use log::{debug, info};

use super::{
    check_bracket, iterate, sub_margin, super_margin, Bracket, IterationConfig, MonotoneError,
    SemilinearProblem, Thresholds,
};
use crate::elliptic::{EllipticOperators, NeumannOptions, NeumannSolver};
use crate::field::ScalarField;

/// Free constants of the bracket constructions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BracketKnobs {
    /// Interior super-solution data (`f`, or `a` for the A > 0 builder).
    pub interior_data: f64,
    /// Boundary super-solution data (`a`, or `b` for the A > 0 builder).
    pub boundary_data: f64,
    /// Magnitude of the constant interior Neumann datum of the sub-solution.
    pub neumann_interior: f64,
    /// Cap for the doubling search of the downward shift.
    pub shift_cap: f64,
    pub bracket_tol: f64,
    /// Exponent `q > 2` in `κ̃ = 0.9 Vol^{-1/q}`.
    pub q: f64,
    /// Scale `a` of the w-space sub-solution data.
    pub w_scale: f64,
    /// Bisection range for the admissible `c`.
    pub c_min: f64,
    pub c_max: f64,
}

impl Default for BracketKnobs {
    fn default() -> Self {
        Self {
            interior_data: 1.0,
            boundary_data: 1.0,
            neumann_interior: 1.0,
            shift_cap: 2f64.powi(60),
            bracket_tol: 1e-9,
            q: 3.0,
            w_scale: 1.0,
            c_min: 1e-8,
            c_max: 1.0,
        }
    }
}

/// Linear super-solution `u₀` and the thresholds it certifies.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperSolution {
    pub u0: Vec<f64>,
    /// Largest admissible `sup K` (`C₀` or `C₂`).
    pub k_threshold: f64,
    /// Largest admissible boundary multiplier (`C₁` or `C₃`); infinite when
    /// `σ <= 0`.
    pub c_threshold: f64,
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), MonotoneError> {
    if cond {
        Ok(())
    } else {
        Err(MonotoneError::Problem(msg()))
    }
}

fn zero_affine(p: &SemilinearProblem) -> bool {
    p.interior_affine
        .iter()
        .chain(&p.boundary_affine)
        .all(|&x| x == 0.0)
}

fn boundary_threshold(ops: &EllipticOperators, sigma: &[f64], u0: &[f64], data: f64) -> f64 {
    let m = sigma
        .iter()
        .zip(ops.boundary_vertices())
        .map(|(s, &v)| s.max(0.0) * u0[v].exp())
        .fold(0.0, f64::max);
    if m > 0.0 {
        data / m
    } else {
        f64::INFINITY
    }
}

/// `u₀` with `(S + κB) u₀ = M f + B a`, `C₀ = min f e^{-2u₀}` and
/// `C₁ = a / max σ⁺e^{u₀}`.
pub fn bm1_thresholds(
    ops: &EllipticOperators,
    kappa: f64,
    sigma: &[f64],
    knobs: &BracketKnobs,
) -> Result<SuperSolution, MonotoneError> {
    require(kappa > 0.0, || format!("κ must be positive, got {kappa}"))?;
    let (n, nb) = (ops.vertex_count(), ops.boundary_vertices().len());
    let factor = ops.factor(&vec![0.0; n], &vec![kappa; nb])?;
    let rhs = ops.load(
        &vec![knobs.interior_data; n],
        &vec![knobs.boundary_data; nb],
    );
    let (u0, _) = factor.solve(&rhs)?;
    let c0 = u0
        .iter()
        .map(|u| knobs.interior_data * (-2.0 * u).exp())
        .fold(f64::INFINITY, f64::min);
    let c1 = boundary_threshold(ops, sigma, &u0, knobs.boundary_data);
    Ok(SuperSolution {
        u0,
        k_threshold: c0,
        c_threshold: c1,
    })
}

/// `u₀` with `(S + AM) u₀ = M a + B b`, `C₂ = a e^{-2 max u₀}` and
/// `C₃ = b / max σ⁺e^{u₀}`.
pub fn bm2_thresholds(
    ops: &EllipticOperators,
    a: f64,
    sigma: &[f64],
    knobs: &BracketKnobs,
) -> Result<SuperSolution, MonotoneError> {
    require(a > 0.0, || format!("A must be positive, got {a}"))?;
    let (n, nb) = (ops.vertex_count(), ops.boundary_vertices().len());
    let factor = ops.factor(&vec![a; n], &vec![0.0; nb])?;
    let rhs = ops.load(
        &vec![knobs.interior_data; n],
        &vec![knobs.boundary_data; nb],
    );
    let (u0, _) = factor.solve(&rhs)?;
    let max_u = u0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c2 = knobs.interior_data * (-2.0 * max_u).exp();
    let c3 = boundary_threshold(ops, sigma, &u0, knobs.boundary_data);
    Ok(SuperSolution {
        u0,
        k_threshold: c2,
        c_threshold: c3,
    })
}

/// Doubles `C` from 1 until `base - C` is a sub-solution lying below
/// `upper`.
fn shift_down(
    problem: &SemilinearProblem,
    ops: &EllipticOperators,
    base: &[f64],
    upper: &[f64],
    knobs: &BracketKnobs,
) -> Result<(Vec<f64>, f64), MonotoneError> {
    let mut c = 1.0;
    while c <= knobs.shift_cap {
        let lower: Vec<f64> = base.iter().map(|u| u - c).collect();
        let ordered = lower.iter().zip(upper).all(|(l, u)| l <= u);
        if ordered && sub_margin(problem, ops, &lower, knobs.bracket_tol) >= -1.0 {
            debug!("sub-solution shift C = {c}");
            return Ok((lower, c));
        }
        c *= 2.0;
    }
    Err(MonotoneError::SearchFailed {
        what: "sub-solution shift",
        detail: format!("no admissible shift up to {:e}", knobs.shift_cap),
    })
}

fn finish(
    problem: &SemilinearProblem,
    ops: &EllipticOperators,
    lower: Vec<f64>,
    upper: Vec<f64>,
    thresholds: Thresholds,
    knobs: &BracketKnobs,
) -> Result<Bracket, MonotoneError> {
    let check = check_bracket(problem, ops, &lower, &upper, knobs.bracket_tol);
    if !check.ok() {
        return Err(MonotoneError::InvalidBracket(format!("{check:?}")));
    }
    Ok(Bracket {
        u_minus: ScalarField::on_vertices(lower)?,
        u_plus: ScalarField::on_vertices(upper)?,
        thresholds,
    })
}

/// Bracket for `-Δu = K e^{2u}`, `∂u/∂ν + κu = cσe^{u}` (A = 0, κ > 0).
pub fn build_bracket_bm1(
    ops: &EllipticOperators,
    problem: &SemilinearProblem,
    knobs: &BracketKnobs,
) -> Result<Bracket, MonotoneError> {
    problem.validate(ops)?;
    require(problem.a == 0.0, || "this bracket needs A = 0".into())?;
    require(zero_affine(problem), || {
        "this bracket needs zero affine terms".into()
    })?;
    let sup = bm1_thresholds(ops, problem.kappa, &problem.sigma, knobs)?;
    let k_max = problem.k.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if k_max > sup.k_threshold {
        return Err(MonotoneError::ThresholdExceeded {
            name: "C0",
            value: k_max,
            threshold: sup.k_threshold,
        });
    }
    if problem.c > sup.c_threshold {
        return Err(MonotoneError::ThresholdExceeded {
            name: "C1",
            value: problem.c,
            threshold: sup.c_threshold,
        });
    }
    let nb = ops.boundary_vertices().len();
    let b1 = -knobs.neumann_interior;
    let b2 = -b1 * ops.volume() / ops.boundary_length();
    let (u1, _, _) = NeumannSolver::new(ops)?.solve(
        &vec![b1; ops.vertex_count()],
        &vec![b2; nb],
        NeumannOptions::default(),
    )?;
    let (lower, _) = shift_down(problem, ops, &u1, &sup.u0, knobs)?;
    let thresholds = Thresholds {
        c0: Some(sup.k_threshold),
        c1: Some(sup.c_threshold),
        ..Default::default()
    };
    finish(problem, ops, lower, sup.u0, thresholds, knobs)
}

/// Bracket for `-Δu + Au = K e^{2u}`, `∂u/∂ν = cσe^{u}` (A > 0, κ = 0).
pub fn build_bracket_bm2(
    ops: &EllipticOperators,
    problem: &SemilinearProblem,
    knobs: &BracketKnobs,
) -> Result<Bracket, MonotoneError> {
    problem.validate(ops)?;
    require(problem.kappa == 0.0, || "this bracket needs κ = 0".into())?;
    require(zero_affine(problem), || {
        "this bracket needs zero affine terms".into()
    })?;
    let sup = bm2_thresholds(ops, problem.a, &problem.sigma, knobs)?;
    let k_max = problem.k.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if k_max > sup.k_threshold {
        return Err(MonotoneError::ThresholdExceeded {
            name: "C2",
            value: k_max,
            threshold: sup.k_threshold,
        });
    }
    if problem.c > sup.c_threshold {
        return Err(MonotoneError::ThresholdExceeded {
            name: "C3",
            value: problem.c,
            threshold: sup.c_threshold,
        });
    }
    let nb = ops.boundary_vertices().len();
    let b1 = knobs.neumann_interior;
    let b2 = -b1 * ops.volume() / ops.boundary_length();
    let (u1, _, _) = NeumannSolver::new(ops)?.solve(
        &vec![b1; ops.vertex_count()],
        &vec![b2; nb],
        NeumannOptions::default(),
    )?;
    let (lower, _) = shift_down(problem, ops, &u1, &sup.u0, knobs)?;
    let thresholds = Thresholds {
        c2: Some(sup.k_threshold),
        c3: Some(sup.c_threshold),
        ..Default::default()
    };
    finish(problem, ops, lower, sup.u0, thresholds, knobs)
}

/// Sub/super-solution data for `-Δu = K e^{2u}`, `∂u/∂ν = cσe^{u}` with
/// `K < 0`, `σ > 0`, valid for every `c` in `(0, d]`.
#[derive(Clone, Debug)]
pub struct Chi0Bracket {
    /// Largest `c` found admissible by bisection.
    pub d: f64,
    /// Super-solution: solves `-Δu₀ = K e^{2u₀}`, `∂u₀/∂ν + u₀ = 0`.
    pub u_plus: Vec<f64>,
    /// `w₀` with `-aΔw₀ = -2K`, `∂w₀/∂ν = (2/a) ∫K / |∂M|`.
    pub w0: Vec<f64>,
    k: Vec<f64>,
    sigma: Vec<f64>,
    knobs: BracketKnobs,
}

impl Chi0Bracket {
    pub fn problem(&self, c: f64) -> SemilinearProblem {
        let n = self.k.len();
        let nb = self.sigma.len();
        SemilinearProblem {
            a: 0.0,
            kappa: 0.0,
            k: self.k.clone(),
            c,
            sigma: self.sigma.clone(),
            interior_affine: vec![0.0; n],
            boundary_affine: vec![0.0; nb],
        }
    }

    fn try_at(&self, ops: &EllipticOperators, c: f64) -> Result<Vec<f64>, MonotoneError> {
        let problem = self.problem(c);
        let margin = super_margin(&problem, ops, &self.u_plus, self.knobs.bracket_tol);
        if margin < -1.0 {
            return Err(MonotoneError::InvalidBracket(format!(
                "u₊ is not a super-solution at c = {c} (margin {margin:.3e})"
            )));
        }
        // u₋ = -½ log(w₀ + C)
        let mut shift = 1.0;
        let lowest = self.w0.iter().copied().fold(f64::INFINITY, f64::min);
        if lowest <= 0.0 {
            shift = (1.0 - lowest).max(1.0);
        }
        while shift <= self.knobs.shift_cap {
            let lower: Vec<f64> = self.w0.iter().map(|w| -0.5 * (w + shift).ln()).collect();
            let ordered = lower.iter().zip(&self.u_plus).all(|(l, u)| l <= u);
            if ordered && sub_margin(&problem, ops, &lower, self.knobs.bracket_tol) >= -1.0 {
                return Ok(lower);
            }
            shift *= 2.0;
        }
        Err(MonotoneError::SearchFailed {
            what: "w-space shift",
            detail: format!("no admissible shift at c = {c}"),
        })
    }

    /// Problem and verified bracket at multiplier `c`.
    pub fn bracket_at(
        &self,
        ops: &EllipticOperators,
        c: f64,
    ) -> Result<(SemilinearProblem, Bracket), MonotoneError> {
        let lower = self.try_at(ops, c)?;
        let problem = self.problem(c);
        let thresholds = Thresholds {
            d: Some(self.d),
            ..Default::default()
        };
        let bracket = finish(
            &problem,
            ops,
            lower,
            self.u_plus.clone(),
            thresholds,
            &self.knobs,
        )?;
        Ok((problem, bracket))
    }
}

pub fn build_bracket_chi0(
    ops: &EllipticOperators,
    k: &[f64],
    sigma: &[f64],
    knobs: &BracketKnobs,
    config: &IterationConfig,
) -> Result<Chi0Bracket, MonotoneError> {
    if let Some(i) = k.iter().position(|&x| !(x < 0.0)) {
        return Err(MonotoneError::Precondition(format!(
            "K must be negative everywhere; K = {} at vertex {i}",
            k[i]
        )));
    }
    if let Some(s) = sigma.iter().position(|&x| !(x > 0.0)) {
        return Err(MonotoneError::Precondition(format!(
            "σ must be positive everywhere on the boundary; σ = {} at boundary vertex {}",
            sigma[s],
            ops.boundary_vertices()[s]
        )));
    }
    let (n, nb) = (ops.vertex_count(), ops.boundary_vertices().len());

    let aux = SemilinearProblem {
        a: 0.0,
        kappa: 1.0,
        k: k.to_vec(),
        c: 0.0,
        sigma: vec![0.0; nb],
        interior_affine: vec![0.0; n],
        boundary_affine: vec![0.0; nb],
    };
    let aux_bracket = build_bracket_bm1(ops, &aux, knobs)?;
    let tight = IterationConfig {
        tol: config.tol.min(1e-11),
        ..*config
    };
    let (u0, _) = iterate(&aux, ops, &aux_bracket, &tight)?;
    let u_plus = u0.into_values();
    if let Some(v) = ops
        .boundary_vertices()
        .iter()
        .find(|&&v| !(u_plus[v] < 0.0))
    {
        return Err(MonotoneError::Precondition(format!(
            "super-solution is not negative at boundary vertex {v}"
        )));
    }

    let a = knobs.w_scale;
    let integral_k = ops.integrate(k);
    let aw = 2.0 / a * integral_k / ops.boundary_length();
    let (w0, _, _) = NeumannSolver::new(ops)?.solve(
        &k.iter().map(|k| -2.0 * k / a).collect::<Vec<_>>(),
        &vec![aw; nb],
        NeumannOptions::default(),
    )?;

    let mut out = Chi0Bracket {
        d: 0.0,
        u_plus,
        w0,
        k: k.to_vec(),
        sigma: sigma.to_vec(),
        knobs: *knobs,
    };
    if let Err(e) = out.try_at(ops, knobs.c_min) {
        return Err(MonotoneError::SearchFailed {
            what: "admissible c",
            detail: format!("c_min = {:e} is not admissible: {e}", knobs.c_min),
        });
    }
    let d = if out.try_at(ops, knobs.c_max).is_ok() {
        knobs.c_max
    } else {
        let (mut lo, mut hi) = (knobs.c_min, knobs.c_max);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if out.try_at(ops, mid).is_ok() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        lo
    };
    info!("admissible boundary multiplier D = {d:.6e}");
    out.d = d;
    Ok(out)
}

/// Bracket for `-Δu = K e^{2u}`, `∂u/∂ν = κ̃` with `K < 0`.
#[derive(Clone, Debug)]
pub struct NegNeumannBracket {
    pub problem: SemilinearProblem,
    pub bracket: Bracket,
    pub kappa_tilde: f64,
    pub xi: f64,
    pub w0: Vec<f64>,
}

pub fn build_bracket_neg_neumann(
    ops: &EllipticOperators,
    k: &[f64],
    knobs: &BracketKnobs,
) -> Result<NegNeumannBracket, MonotoneError> {
    if let Some(i) = k.iter().position(|&x| !(x < 0.0)) {
        return Err(MonotoneError::Precondition(format!(
            "K must be negative everywhere; K = {} at vertex {i}",
            k[i]
        )));
    }
    require(knobs.q > 2.0, || {
        format!("q must exceed 2, got {}", knobs.q)
    })?;
    let (n, nb) = (ops.vertex_count(), ops.boundary_vertices().len());
    let volume = ops.volume();
    let kappa_tilde = 0.9 * volume.powf(-1.0 / knobs.q);

    let factor = ops.factor(&vec![0.0; n], &vec![2.0 * kappa_tilde; nb])?;
    let (w0, _) =
        factor.solve(&ops.load(&k.iter().map(|k| -k).collect::<Vec<_>>(), &vec![0.0; nb]))?;
    if let Some(v) = w0.iter().position(|&w| !(w > 0.0)) {
        return Err(MonotoneError::Precondition(format!(
            "w₀ is not positive at vertex {v} ({:e}); mesh quality too poor",
            w0[v]
        )));
    }

    let problem = SemilinearProblem {
        a: 0.0,
        kappa: 0.0,
        k: k.to_vec(),
        c: 0.0,
        sigma: vec![0.0; nb],
        interior_affine: vec![0.0; n],
        boundary_affine: vec![-kappa_tilde; nb],
    };

    let grad = ops.gradient_energy_density(&w0);
    let ratio = |xi: f64| {
        (0..n)
            .map(|i| xi * (grad[i] / w0[i] - k[i]) / (-2.0 * k[i]))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut xi = 1.0;
    let upper = loop {
        let candidate: Vec<f64> = w0.iter().map(|w| -0.5 * (xi * w).ln()).collect();
        if ratio(xi) <= 1.0 && super_margin(&problem, ops, &candidate, knobs.bracket_tol) >= -1.0 {
            break candidate;
        }
        xi *= 0.5;
        if xi < 1e-300 {
            return Err(MonotoneError::SearchFailed {
                what: "ξ",
                detail: format!("gradient ratio at ξ = 1 is {:.3e}", ratio(1.0)),
            });
        }
    };
    debug!("ξ = {xi:e}, κ̃ = {kappa_tilde:e}");

    let a_s = -kappa_tilde * ops.boundary_length() / volume;
    let (u0, _, _) = NeumannSolver::new(ops)?.solve(
        &vec![a_s; n],
        &vec![kappa_tilde; nb],
        NeumannOptions::default(),
    )?;
    let (lower, _) = shift_down(&problem, ops, &u0, &upper, knobs)?;
    let bracket = finish(&problem, ops, lower, upper, Thresholds::default(), knobs)?;
    Ok(NegNeumannBracket {
        problem,
        bracket,
        kappa_tilde,
        xi,
        w0,
    })
}
