use log::{debug, info};
use serde::Serialize;

use super::{check_bracket, Bracket, MonotoneError, SemilinearProblem};
use crate::elliptic::EllipticOperators;
use crate::field::ScalarField;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationConfig {
    /// Extra slack added to both shifts. `None` uses `0.1 (1 + base)` for
    /// each shift separately.
    pub shift_margin: Option<f64>,
    /// Stopping tolerance on the mass-normalized residual sups.
    pub tol: f64,
    pub max_iters: usize,
    /// Record sup|G| and its tangential gradient at `u₊`.
    pub smallness_check: bool,
    pub bracket_tol: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            shift_margin: None,
            tol: 1e-10,
            max_iters: 2000,
            smallness_check: true,
            bracket_tol: 1e-9,
        }
    }
}

/// Boundary nonlinearity `G(u) = cσe^{u} - σ_aff - κu` at the super-solution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Smallness {
    pub sup_g: f64,
    pub sup_tangential_gradient_g: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IterationTrace {
    pub lambda: f64,
    pub mu: f64,
    /// `sup |u_{k+1} - u_k|` per step.
    pub deltas: Vec<f64>,
    /// Residual sups before each step, and at the returned iterate last.
    pub interior_residuals: Vec<f64>,
    pub boundary_residuals: Vec<f64>,
    /// Whether step `k` was componentwise nonincreasing within 1e-12.
    pub monotone: Vec<bool>,
    /// Largest componentwise increase seen over all steps.
    pub max_increase: f64,
    pub smallness: Option<Smallness>,
    pub iterations: usize,
}

impl IterationTrace {
    pub fn final_residual(&self) -> f64 {
        let i = self.interior_residuals.last().copied().unwrap_or(f64::NAN);
        let b = self.boundary_residuals.last().copied().unwrap_or(f64::NAN);
        i.max(b)
    }

    pub fn all_monotone(&self) -> bool {
        self.monotone.iter().all(|&m| m)
    }
}

fn sup(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.abs()))
}

/// Runs the shifted fixed-point iteration
/// `(S + λM + μB) u_{k+1} = (S + λM + μB) u_k - R(u_k)` from `u₊`.
///
/// `λ` and `μ` make the right-hand side nondecreasing in `u` on the
/// bracket, so the iterates decrease monotonically towards a solution
/// (given nonnegative cotangent weights).
pub fn iterate(
    problem: &SemilinearProblem,
    ops: &EllipticOperators,
    bracket: &Bracket,
    config: &IterationConfig,
) -> Result<(ScalarField, IterationTrace), MonotoneError> {
    problem.validate(ops)?;
    if !(config.tol > 0.0) || config.max_iters == 0 {
        return Err(MonotoneError::Problem(
            "iteration needs tol > 0 and max_iters >= 1".into(),
        ));
    }
    let (lower, upper) = (bracket.u_minus.values(), bracket.u_plus.values());
    ops.conform_vertices(&bracket.u_minus)?;
    ops.conform_vertices(&bracket.u_plus)?;
    let check = check_bracket(problem, ops, lower, upper, config.bracket_tol);
    if !check.ok() {
        return Err(MonotoneError::InvalidBracket(format!("{check:?}")));
    }

    let boundary = ops.boundary_vertices();
    let lambda0 = problem.a
        + 2.0
            * problem
                .k
                .iter()
                .zip(upper)
                .map(|(k, u)| (-k).max(0.0) * (2.0 * u).exp())
                .fold(0.0, f64::max);
    let mu0 = problem.kappa
        + problem.c
            * problem
                .sigma
                .iter()
                .zip(boundary)
                .map(|(s, &v)| (-s).max(0.0) * upper[v].exp())
                .fold(0.0, f64::max);
    let (lambda, mu) = match config.shift_margin {
        Some(m) => (lambda0 + m, mu0 + m),
        None => (lambda0 + 0.1 * (1.0 + lambda0), mu0 + 0.1 * (1.0 + mu0)),
    };
    let factor = ops.factor_constant(lambda, mu)?;
    info!("monotone iteration: λ = {lambda:.6e}, μ = {mu:.6e}");

    let mut trace = IterationTrace {
        lambda,
        mu,
        ..Default::default()
    };
    if config.smallness_check {
        let g: Vec<f64> = boundary
            .iter()
            .enumerate()
            .map(|(s, &v)| {
                problem.c * problem.sigma[s] * upper[v].exp()
                    - problem.boundary_affine[s]
                    - problem.kappa * upper[v]
            })
            .collect();
        trace.smallness = Some(Smallness {
            sup_g: sup(g.iter().copied()),
            sup_tangential_gradient_g: ops.boundary_gradient_sup(&g),
        });
    }

    let mut u = upper.to_vec();
    let mut first_residual = None;
    for k in 0..=config.max_iters {
        let r = problem.residual(ops, &u);
        let (ri, rb) = super::normalized_sups(ops, &r);
        trace.interior_residuals.push(ri);
        trace.boundary_residuals.push(rb);
        let res = ri.max(rb);
        debug!("iteration {k}: residual {res:.3e}");
        if !res.is_finite() || res > 1e8 * *first_residual.get_or_insert(res.max(1.0)) {
            return Err(MonotoneError::Diverged {
                iteration: k,
                residual: res,
            });
        }
        if res <= config.tol {
            trace.iterations = k;
            info!("monotone iteration converged in {k} steps (residual {res:.3e})");
            return Ok((ScalarField::on_vertices(u)?, trace));
        }
        if k == config.max_iters {
            break;
        }
        let (du, _) = factor.solve(&r)?;
        let next: Vec<f64> = u.iter().zip(&du).map(|(u, d)| u - d).collect();
        if next.iter().any(|x| !x.is_finite()) {
            return Err(MonotoneError::Diverged {
                iteration: k + 1,
                residual: f64::NAN,
            });
        }
        let scale = 1.0 + sup(u.iter().copied());
        let increase = next
            .iter()
            .zip(&u)
            .map(|(n, o)| n - o)
            .fold(f64::NEG_INFINITY, f64::max);
        trace.max_increase = trace.max_increase.max(increase);
        trace.monotone.push(increase <= 1e-12 * scale);
        if increase > 1e-10 * scale {
            return Err(MonotoneError::OrderViolated {
                iteration: k + 1,
                kind: "iterate increased",
                amount: increase,
            });
        }
        let below = lower
            .iter()
            .zip(&next)
            .map(|(l, n)| l - n)
            .fold(f64::NEG_INFINITY, f64::max);
        if below > 1e-10 * scale {
            return Err(MonotoneError::OrderViolated {
                iteration: k + 1,
                kind: "iterate fell below the sub-solution",
                amount: below,
            });
        }
        trace.deltas.push(sup(du.iter().copied()));
        u = next;
    }
    Err(MonotoneError::MaxIterations {
        iterations: config.max_iters,
        residual: trace.final_residual(),
    })
}
