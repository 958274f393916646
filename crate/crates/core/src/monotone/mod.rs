//! Monotone iteration between ordered sub- and super-solutions of
//!
//! ```text
//! -Δu + A u + K_aff = K e^{2u}          in M
//!  ∂u/∂ν + κ u + σ_aff = c σ e^{u}      on ∂M
//! ```
//!
//! and the bracket builders that produce such pairs.

mod brackets;
mod iterate;

use serde::Serialize;
use thiserror::Error;

use crate::elliptic::{EllipticOperators, SolveError};
use crate::field::{FieldError, ScalarField};

pub use brackets::{
    bm1_thresholds, bm2_thresholds, build_bracket_bm1, build_bracket_bm2, build_bracket_chi0,
    build_bracket_neg_neumann, BracketKnobs, Chi0Bracket, NegNeumannBracket, SuperSolution,
};
pub use iterate::{iterate, IterationConfig, IterationTrace, Smallness};

#[derive(Debug, Error)]
pub enum MonotoneError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid bracket: {0}")]
    InvalidBracket(String),
    #[error("{name} threshold exceeded: {value:e} > {threshold:e}; scale the data down")]
    ThresholdExceeded {
        name: &'static str,
        value: f64,
        threshold: f64,
    },
    #[error("{what} search failed: {detail}")]
    SearchFailed { what: &'static str, detail: String },
    #[error("iteration {iteration}: {kind} by {amount:e}")]
    OrderViolated {
        iteration: usize,
        kind: &'static str,
        amount: f64,
    },
    #[error("iteration {iteration} diverged (residual {residual:e})")]
    Diverged { iteration: usize, residual: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
}

/// One instance of the semilinear boundary value problem, discretized on
/// a fixed set of [`EllipticOperators`].
///
/// Interior vectors are per vertex, boundary vectors per boundary slot.
#[derive(Clone, Debug, PartialEq)]
pub struct SemilinearProblem {
    pub a: f64,
    pub kappa: f64,
    pub k: Vec<f64>,
    pub c: f64,
    pub sigma: Vec<f64>,
    pub interior_affine: Vec<f64>,
    pub boundary_affine: Vec<f64>,
}

impl SemilinearProblem {
    /// Problem with zero affine terms.
    pub fn new(
        ops: &EllipticOperators,
        a: f64,
        kappa: f64,
        k: &ScalarField,
        c: f64,
        sigma: &ScalarField,
    ) -> Result<Self, MonotoneError> {
        ops.conform_vertices(k)?;
        ops.conform_boundary(sigma)?;
        let p = Self {
            a,
            kappa,
            k: k.values().to_vec(),
            c,
            sigma: sigma.values().to_vec(),
            interior_affine: vec![0.0; ops.vertex_count()],
            boundary_affine: vec![0.0; ops.boundary_vertices().len()],
        };
        p.validate(ops)?;
        Ok(p)
    }

    pub fn with_affine(mut self, interior: Vec<f64>, boundary: Vec<f64>) -> Self {
        self.interior_affine = interior;
        self.boundary_affine = boundary;
        self
    }

    pub fn validate(&self, ops: &EllipticOperators) -> Result<(), MonotoneError> {
        let (n, nb) = (ops.vertex_count(), ops.boundary_vertices().len());
        let bad = |m: String| Err(MonotoneError::Problem(m));
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return bad(format!("A must be finite and nonnegative, got {}", self.a));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return bad(format!(
                "κ must be finite and nonnegative, got {}",
                self.kappa
            ));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return bad(format!("c must be finite and nonnegative, got {}", self.c));
        }
        if self.k.len() != n || self.interior_affine.len() != n {
            return bad(format!("interior fields need {n} values"));
        }
        if self.sigma.len() != nb || self.boundary_affine.len() != nb {
            return bad(format!("boundary fields need {nb} values"));
        }
        let all = self
            .k
            .iter()
            .chain(&self.sigma)
            .chain(&self.interior_affine)
            .chain(&self.boundary_affine);
        if all.clone().any(|x| !x.is_finite()) {
            return bad("coefficient fields must be finite".into());
        }
        Ok(())
    }

    /// Discrete weak residual
    /// `S u + A M u + κ B u - M(K e^{2u} - K_aff) - B(cσ e^{u} - σ_aff)`.
    ///
    /// Nonnegative rows mean `u` is a super-solution there.
    pub fn residual(&self, ops: &EllipticOperators, u: &[f64]) -> Vec<f64> {
        let mut r = ops.apply_stiffness(u);
        let m = ops.interior_mass();
        for i in 0..r.len() {
            r[i] +=
                m[i] * (self.a * u[i] - (self.k[i] * (2.0 * u[i]).exp() - self.interior_affine[i]));
        }
        let bm = ops.boundary_mass();
        for (s, &v) in ops.boundary_vertices().iter().enumerate() {
            let g = self.c * self.sigma[s] * u[v].exp() - self.boundary_affine[s];
            r[v] += bm[v] * (self.kappa * u[v] - g);
        }
        r
    }

    /// Magnitude of the terms entering each residual row, plus the row's
    /// masses; the natural scale for sign tolerances.
    pub fn residual_scale(&self, ops: &EllipticOperators, u: &[f64]) -> Vec<f64> {
        let mut s = ops.stiffness_magnitude(u);
        let m = ops.interior_mass();
        for i in 0..s.len() {
            s[i] += m[i]
                * (1.0
                    + (self.a * u[i]).abs()
                    + (self.k[i] * (2.0 * u[i]).exp()).abs()
                    + self.interior_affine[i].abs());
        }
        let bm = ops.boundary_mass();
        for (slot, &v) in ops.boundary_vertices().iter().enumerate() {
            s[v] += bm[v]
                * (1.0
                    + (self.kappa * u[v]).abs()
                    + (self.c * self.sigma[slot] * u[v].exp()).abs()
                    + self.boundary_affine[slot].abs());
        }
        s
    }

    /// `(sup over interior rows of |R_i|/M_i, sup over boundary rows of |R_i|/B_i)`.
    pub fn residual_sups(&self, ops: &EllipticOperators, u: &[f64]) -> (f64, f64) {
        normalized_sups(ops, &self.residual(ops, u))
    }
}

pub(crate) fn normalized_sups(ops: &EllipticOperators, r: &[f64]) -> (f64, f64) {
    let bm = ops.boundary_mass();
    let mut interior = 0.0f64;
    let mut boundary = 0.0f64;
    for (i, (&ri, &m)) in r.iter().zip(ops.interior_mass()).enumerate() {
        if bm[i] > 0.0 {
            boundary = boundary.max((ri / bm[i]).abs());
        } else {
            interior = interior.max((ri / m).abs());
        }
    }
    (interior, boundary)
}

/// Constants estimated while building a bracket. `None` where the builder
/// does not define the constant; `Some(∞)` where it is unbounded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Thresholds {
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub d: Option<f64>,
}

/// An ordered sub/super-solution pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Bracket {
    pub u_minus: ScalarField,
    pub u_plus: ScalarField,
    pub thresholds: Thresholds,
}

/// Outcome of [`check_bracket`]: the worst signed margins, normalized by
/// the row tolerance scale (so `-1` is exactly at tolerance).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BracketCheck {
    pub ordered: bool,
    pub super_ok: bool,
    pub sub_ok: bool,
    pub worst_super: f64,
    pub worst_sub: f64,
}

impl BracketCheck {
    pub fn ok(&self) -> bool {
        self.ordered && self.super_ok && self.sub_ok
    }
}

/// Super-solution rows must satisfy `R_i(u₊) >= -tol_i` and sub-solution
/// rows `R_i(u₋) <= tol_i`, with `tol_i = bracket_tol` times the row scale.
pub fn check_bracket(
    problem: &SemilinearProblem,
    ops: &EllipticOperators,
    u_minus: &[f64],
    u_plus: &[f64],
    bracket_tol: f64,
) -> BracketCheck {
    let ordered = u_minus.iter().zip(u_plus).all(|(a, b)| a <= b);
    let worst_super = super_margin(problem, ops, u_plus, bracket_tol);
    let worst_sub = sub_margin(problem, ops, u_minus, bracket_tol);
    BracketCheck {
        ordered,
        super_ok: worst_super >= -1.0,
        sub_ok: worst_sub >= -1.0,
        worst_super,
        worst_sub,
    }
}

/// `min_i R_i(u) / tol_i`; `>= -1` means `u` is a super-solution.
pub(crate) fn super_margin(
    problem: &SemilinearProblem,
    ops: &EllipticOperators,
    u: &[f64],
    bracket_tol: f64,
) -> f64 {
    let r = problem.residual(ops, u);
    let s = problem.residual_scale(ops, u);
    r.iter()
        .zip(&s)
        .map(|(r, s)| r / (bracket_tol * s))
        .fold(f64::INFINITY, f64::min)
}

/// `min_i -R_i(u) / tol_i`; `>= -1` means `u` is a sub-solution.
pub(crate) fn sub_margin(
    problem: &SemilinearProblem,
    ops: &EllipticOperators,
    u: &[f64],
    bracket_tol: f64,
) -> f64 {
    let r = problem.residual(ops, u);
    let s = problem.residual_scale(ops, u);
    r.iter()
        .zip(&s)
        .map(|(r, s)| -r / (bracket_tol * s))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::LoadedMesh;
    use curvforge_testmesh as tm;

    fn ops() -> (LoadedMesh, EllipticOperators) {
        let m = tm::disk(3);
        let d = LoadedMesh::from_positions(m.positions, m.triangles).unwrap();
        let o = EllipticOperators::assemble(&d.mesh, &d.metric);
        (d, o)
    }

    #[test]
    fn zero_problem_has_zero_residual() {
        let (d, o) = ops();
        let p = SemilinearProblem::new(
            &o,
            0.0,
            1.0,
            &ScalarField::constant(&d.mesh, crate::field::FieldDomain::Vertices, 0.0),
            0.0,
            &ScalarField::constant(&d.mesh, crate::field::FieldDomain::Boundary, 0.0),
        )
        .unwrap();
        assert_eq!(
            p.residual_sups(&o, &vec![0.0; o.vertex_count()]),
            (0.0, 0.0)
        );
        let c = check_bracket(
            &p,
            &o,
            &vec![-1.0; o.vertex_count()],
            &vec![1.0; o.vertex_count()],
            1e-9,
        );
        assert!(c.ok(), "{c:?}");
        let c = check_bracket(
            &p,
            &o,
            &vec![1.0; o.vertex_count()],
            &vec![-1.0; o.vertex_count()],
            1e-9,
        );
        assert!(!c.ordered && !c.super_ok && !c.sub_ok);
    }

    #[test]
    fn invalid_problems_rejected() {
        let (d, o) = ops();
        let k = ScalarField::constant(&d.mesh, crate::field::FieldDomain::Vertices, 0.0);
        let s = ScalarField::constant(&d.mesh, crate::field::FieldDomain::Boundary, 0.0);
        assert!(SemilinearProblem::new(&o, -1.0, 1.0, &k, 0.0, &s).is_err());
        assert!(SemilinearProblem::new(&o, 0.0, 1.0, &s, 0.0, &s).is_err());
    }
}
