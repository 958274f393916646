use serde::Serialize;
use sprs::{CsMat, TriMat};
use sprs_ldl::{Ldl, LdlNumeric};

use super::{EllipticOperators, SolveError};
use crate::field::ScalarField;

const TARGET_BACKWARD_ERROR: f64 = 1e-12;
const MAX_REFINEMENTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveStats {
    /// Normwise backward error `‖b - Ax‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)`.
    pub residual_norm: f64,
    /// Triangular solves performed (1 plus refinement steps).
    pub iterations: usize,
    pub factorization_reused: bool,
}

/// A sparse LDLᵀ factorization kept together with its matrix so that every
/// solve can measure its own residual and refine.
pub struct Factorization {
    matrix: CsMat<f64>,
    ldl: LdlNumeric<f64, usize>,
    norm_inf: f64,
    solves: std::sync::atomic::AtomicUsize,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization")
            .field("size", &self.matrix.rows())
            .field("nnz", &self.matrix.nnz())
            .finish()
    }
}

impl Factorization {
    pub fn new(matrix: CsMat<f64>) -> Result<Self, SolveError> {
        let ldl = Ldl::new()
            .fill_in_reduction(sprs::FillInReduction::ReverseCuthillMcKee)
            .check_symmetry(sprs::SymmetryCheck::DontCheckSymmetry)
            .numeric(matrix.view())
            .map_err(|e| SolveError::Factorization(e.to_string()))?;
        if let Some(d) = ldl.d().iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(SolveError::Factorization(format!(
                "matrix is not positive definite (pivot {d:e})"
            )));
        }
        let norm_inf = matrix
            .outer_iterator()
            .map(|row| row.iter().map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(Self {
            matrix,
            ldl,
            norm_inf,
            solves: Default::default(),
        })
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CsMat<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        sprs::prod::mul_acc_mat_vec_csr(self.matrix.view(), x, &mut out[..]);
        out
    }

    fn backward_error(&self, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
        let ax = self.apply(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let denom = self.norm_inf * inf(x) + inf(b);
        let eta = if denom == 0.0 { 0.0 } else { inf(&r) / denom };
        (r, eta)
    }

    /// Solves `A x = b` with iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, SolveStats), SolveError> {
        assert_eq!(b.len(), self.size());
        let reused = self
            .solves
            .fetch_add(1, std::sync::atomic::Ordering::Relaxed)
            > 0;
        let mut x: Vec<f64> = self.ldl.solve(b);
        let (mut r, mut eta) = self.backward_error(&x, b);
        let mut iterations = 1;
        while eta > TARGET_BACKWARD_ERROR && iterations <= MAX_REFINEMENTS {
            let dx: Vec<f64> = self.ldl.solve(&r);
            let candidate: Vec<f64> = x.iter().zip(&dx).map(|(x, d)| x + d).collect();
            let (r2, eta2) = self.backward_error(&candidate, b);
            iterations += 1;
            if !(eta2 < eta) {
                break;
            }
            x = candidate;
            r = r2;
            eta = eta2;
        }
        if !(eta <= TARGET_BACKWARD_ERROR) {
            return Err(SolveError::Inaccurate {
                backward_error: eta,
            });
        }
        Ok((
            x,
            SolveStats {
                residual_norm: eta,
                iterations,
                factorization_reused: reused,
            },
        ))
    }
}

/// `(S + B·diag(robin)) u = M f + B f̃`, the discrete Robin problem
/// `-Δu = f`, `∂u/∂ν + robin·u = f̃`.
#[derive(Clone, Debug)]
pub struct RobinProblem<'a> {
    pub operators: &'a EllipticOperators,
    /// Boundary field.
    pub robin_coefficient: ScalarField,
    /// Vertex field.
    pub interior_rhs: ScalarField,
    /// Boundary field.
    pub boundary_rhs: ScalarField,
}

pub fn solve_robin(problem: &RobinProblem) -> Result<(ScalarField, SolveStats), SolveError> {
    let ops = problem.operators;
    ops.conform_boundary(&problem.robin_coefficient)?;
    ops.conform_vertices(&problem.interior_rhs)?;
    ops.conform_boundary(&problem.boundary_rhs)?;
    let factor = ops.factor(
        &vec![0.0; ops.vertex_count()],
        problem.robin_coefficient.values(),
    )?;
    let rhs = ops.load(problem.interior_rhs.values(), problem.boundary_rhs.values());
    let (u, stats) = factor.solve(&rhs)?;
    Ok((ScalarField::on_vertices(u)?, stats))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeumannOptions {
    /// Relative tolerance on `|∫f + ∮g|` against `∫|f| + ∮|g|`.
    pub compat_tol: f64,
    /// Subtract a constant from `f` instead of failing when the data are
    /// incompatible beyond `compat_tol`.
    pub project: bool,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        Self {
            compat_tol: 1e-8,
            project: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NeumannInfo {
    /// `∫f + ∮g` of the data as given.
    pub defect: f64,
    /// Constant removed from `f` to make the data exactly compatible.
    pub projected_constant: f64,
}

/// Pure-Neumann solver: factorizes the stiffness matrix with vertex 0
/// pinned, once, and returns mass-weighted mean-zero solutions.
#[derive(Debug)]
pub struct NeumannSolver<'a> {
    ops: &'a EllipticOperators,
    reduced: Factorization,
}

impl<'a> NeumannSolver<'a> {
    pub fn new(ops: &'a EllipticOperators) -> Result<Self, SolveError> {
        let n = ops.vertex_count();
        let s = ops.stiffness();
        let mut tri = TriMat::with_capacity((n - 1, n - 1), s.nnz());
        for (v, (i, j)) in s.iter() {
            if i > 0 && j > 0 {
                tri.add_triplet(i - 1, j - 1, *v);
            }
        }
        Ok(Self {
            ops,
            reduced: Factorization::new(tri.to_csr())?,
        })
    }

    /// Solves `S u = M f + B g` for vertex field `f` and boundary field `g`.
    pub fn solve(
        &self,
        f: &[f64],
        g: &[f64],
        options: NeumannOptions,
    ) -> Result<(Vec<f64>, SolveStats, NeumannInfo), SolveError> {
        let ops = self.ops;
        if let Some(x) = f.iter().chain(g).find(|x| !x.is_finite()) {
            return Err(SolveError::Factorization(format!(
                "non-finite right-hand side {x}"
            )));
        }
        let defect = ops.integrate(f) + ops.integrate_boundary(g);
        let scale = ops
            .interior_mass()
            .iter()
            .zip(f)
            .map(|(m, f)| m * f.abs())
            .sum::<f64>()
            + ops.integrate_boundary(&g.iter().map(|x| x.abs()).collect::<Vec<_>>());
        let tolerance = options.compat_tol * scale.max(f64::MIN_POSITIVE);
        if defect.abs() > tolerance && !options.project {
            return Err(SolveError::Incompatible { defect, tolerance });
        }
        let shift = defect / ops.volume();
        let mut rhs = ops.load(&f.iter().map(|x| x - shift).collect::<Vec<_>>(), g);
        // the dropped row is implied by compatibility; take out the
        // roundoff left in the sum as well
        let leftover: f64 = rhs.iter().sum::<f64>() / ops.volume();
        for (r, m) in rhs.iter_mut().zip(ops.interior_mass()) {
            *r -= leftover * m;
        }
        let (reduced, stats) = self.reduced.solve(&rhs[1..])?;
        let mut u = Vec::with_capacity(rhs.len());
        u.push(0.0);
        u.extend(reduced);
        let mean = ops.integrate(&u) / ops.volume();
        u.iter_mut().for_each(|x| *x -= mean);
        Ok((
            u,
            stats,
            NeumannInfo {
                defect,
                projected_constant: shift,
            },
        ))
    }
}

/// One-shot compatible Neumann solve of `-Δu = f`, `∂u/∂ν = g` with
/// mass-weighted mean zero.
pub fn solve_neumann_compatible(
    ops: &EllipticOperators,
    interior_rhs: &ScalarField,
    boundary_rhs: &ScalarField,
    options: NeumannOptions,
) -> Result<(ScalarField, SolveStats, NeumannInfo), SolveError> {
    ops.conform_vertices(interior_rhs)?;
    ops.conform_boundary(boundary_rhs)?;
    let (u, stats, info) =
        NeumannSolver::new(ops)?.solve(interior_rhs.values(), boundary_rhs.values(), options)?;
    Ok((ScalarField::on_vertices(u)?, stats, info))
}
