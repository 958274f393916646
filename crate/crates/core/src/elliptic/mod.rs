//! Cotangent stiffness, lumped masses, and the linear Robin and Neumann
//! solves built on them.

mod solve;

use sprs::{CsMat, TriMat};
use thiserror::Error;

use crate::field::{FieldDomain, FieldError, ScalarField};
use crate::mesh::{DiscreteCurvature, IntrinsicMetric, SurfaceMesh};

pub use solve::{
    solve_neumann_compatible, solve_robin, Factorization, NeumannInfo, NeumannOptions,
    NeumannSolver, RobinProblem, SolveStats,
};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("system is singular: Robin coefficient and interior coefficient both vanish (use the Neumann solver)")]
    Singular,
    #[error("coefficient must be nonnegative, found {0}")]
    NegativeCoefficient(f64),
    #[error("Neumann data violate compatibility: |∫f + ∮g| = {defect:e} exceeds {tolerance:e}")]
    Incompatible { defect: f64, tolerance: f64 },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error(
        "linear solve did not reach the requested accuracy (backward error {backward_error:e})"
    )]
    Inaccurate { backward_error: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Discretization of `-Δ` with lumped interior and boundary masses.
///
/// All vectors are per vertex. `boundary_mass` is zero at interior
/// vertices.
#[derive(Clone, Debug)]
pub struct EllipticOperators {
    stiffness: CsMat<f64>,
    edges: Vec<[usize; 2]>,
    edge_weights: Vec<f64>,
    interior_mass: Vec<f64>,
    boundary_mass: Vec<f64>,
    boundary_vertices: Vec<usize>,
    // (slot, slot, length) for each boundary edge
    boundary_edges: Vec<(usize, usize, f64)>,
    triangles: Vec<[usize; 3]>,
    triangle_cotangents: Vec<[f64; 3]>,
}

impl EllipticOperators {
    pub fn assemble(mesh: &SurfaceMesh, metric: &IntrinsicMetric) -> Self {
        let geometry = metric.all_triangle_geometry(mesh);
        let mut edge_weights = vec![0.0; mesh.edge_count()];
        for (te, g) in mesh.triangle_edges().iter().zip(&geometry) {
            for k in 0..3 {
                edge_weights[te[k]] += 0.5 * g.cotangents[k];
            }
        }
        let curvature = DiscreteCurvature::compute(mesh, metric);
        let boundary_mass = mesh.expand_boundary(&curvature.boundary_dual_length);

        let n = mesh.vertex_count();
        let mut diagonal = vec![0.0; n];
        let mut tri = TriMat::with_capacity((n, n), n + 2 * edge_weights.len());
        for (&[a, b], &w) in mesh.edges().iter().zip(&edge_weights) {
            tri.add_triplet(a, b, -w);
            tri.add_triplet(b, a, -w);
            diagonal[a] += w;
            diagonal[b] += w;
        }
        for (i, d) in diagonal.into_iter().enumerate() {
            tri.add_triplet(i, i, d);
        }
        let boundary_edges = (0..mesh.edge_count())
            .filter(|&e| mesh.is_boundary_edge(e))
            .map(|e| {
                let [a, b] = mesh.edges()[e];
                let slot = |v| mesh.boundary_slot(v).expect("boundary edge endpoint");
                (slot(a), slot(b), metric.lengths()[e])
            })
            .collect();
        Self {
            stiffness: tri.to_csr(),
            edges: mesh.edges().to_vec(),
            edge_weights,
            interior_mass: curvature.dual_area,
            boundary_mass,
            boundary_vertices: mesh.boundary_vertices().to_vec(),
            boundary_edges,
            triangles: mesh.triangles().to_vec(),
            triangle_cotangents: geometry.iter().map(|g| g.cotangents).collect(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.interior_mass.len()
    }

    pub fn stiffness(&self) -> &CsMat<f64> {
        &self.stiffness
    }

    /// Half the sum of opposite cotangents, per edge.
    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weights
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn min_edge_weight(&self) -> f64 {
        self.edge_weights
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether every cotangent weight is nonnegative (up to `tol`), the
    /// condition under which the discrete maximum principle holds.
    pub fn weights_nonnegative(&self, tol: f64) -> bool {
        self.min_edge_weight() >= -tol
    }

    pub fn interior_mass(&self) -> &[f64] {
        &self.interior_mass
    }

    pub fn boundary_mass(&self) -> &[f64] {
        &self.boundary_mass
    }

    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn volume(&self) -> f64 {
        self.interior_mass.iter().sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_mass.iter().sum()
    }

    /// `S u` in edge-difference form, so constants map to exactly zero.
    pub fn apply_stiffness(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.vertex_count());
        let mut out = vec![0.0; u.len()];
        for (&[a, b], &w) in self.edges.iter().zip(&self.edge_weights) {
            let d = w * (u[a] - u[b]);
            out[a] += d;
            out[b] -= d;
        }
        out
    }

    /// `|S| |u|`: the magnitude scale of each row of `S u`.
    pub fn stiffness_magnitude(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for (&[a, b], &w) in self.edges.iter().zip(&self.edge_weights) {
            let w = w.abs();
            out[a] += w * (u[a].abs() + u[b].abs());
            out[b] += w * (u[a].abs() + u[b].abs());
        }
        out
    }

    /// `uᵀ S v`.
    pub fn dirichlet_form(&self, u: &[f64], v: &[f64]) -> f64 {
        self.edges
            .iter()
            .zip(&self.edge_weights)
            .map(|(&[a, b], &w)| w * (u[a] - u[b]) * (v[a] - v[b]))
            .sum()
    }

    /// Boundary edges as `(slot, slot, length)`.
    pub fn boundary_edges(&self) -> &[(usize, usize, f64)] {
        &self.boundary_edges
    }

    /// Area-weighted vertex average of the piecewise-constant `|∇w|²` of
    /// the linear interpolant of `w`.
    pub fn gradient_energy_density(&self, w: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.vertex_count()];
        for (t, cot) in self.triangles.iter().zip(&self.triangle_cotangents) {
            // ∫_t |∇w|² = ½ Σ_k cot θ_k (w_{k+1} - w_{k+2})²
            let energy: f64 = (0..3)
                .map(|k| 0.5 * cot[k] * (w[t[(k + 1) % 3]] - w[t[(k + 2) % 3]]).powi(2))
                .sum();
            for &v in t {
                acc[v] += energy;
            }
        }
        // Σ_t∋v area_t = 3 M_v
        acc.iter()
            .zip(&self.interior_mass)
            .map(|(e, m)| e / (3.0 * m))
            .collect()
    }

    /// Largest `|g_a - g_b| / ℓ` over boundary edges for a boundary field.
    pub fn boundary_gradient_sup(&self, g: &[f64]) -> f64 {
        self.boundary_edges
            .iter()
            .map(|&(a, b, l)| (g[a] - g[b]).abs() / l)
            .fold(0.0, f64::max)
    }

    /// Per-vertex copy of a per-boundary-slot vector, zero inside.
    pub fn expand_boundary(&self, boundary: &[f64]) -> Vec<f64> {
        assert_eq!(boundary.len(), self.boundary_vertices.len());
        let mut out = vec![0.0; self.vertex_count()];
        for (&v, &x) in self.boundary_vertices.iter().zip(boundary) {
            out[v] = x;
        }
        out
    }

    pub fn restrict_to_boundary(&self, values: &[f64]) -> Vec<f64> {
        self.boundary_vertices.iter().map(|&v| values[v]).collect()
    }

    /// Load vector `M f + B g` for a vertex field `f` and boundary field `g`.
    pub fn load(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.vertex_count());
        let mut out: Vec<f64> = f
            .iter()
            .zip(&self.interior_mass)
            .map(|(f, m)| f * m)
            .collect();
        for (&v, &g) in self.boundary_vertices.iter().zip(g) {
            out[v] += self.boundary_mass[v] * g;
        }
        out
    }

    /// `∫ f dVol` with the lumped mass.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.interior_mass).map(|(f, m)| f * m).sum()
    }

    /// `∮ g dS` for a boundary field.
    pub fn integrate_boundary(&self, g: &[f64]) -> f64 {
        self.boundary_vertices
            .iter()
            .zip(g)
            .map(|(&v, g)| g * self.boundary_mass[v])
            .sum()
    }

    /// Factorizes `S + diag(M α) + diag(B β)` for per-vertex `α` and
    /// per-boundary-slot `β`, both nonnegative and not both zero.
    pub fn factor(&self, alpha: &[f64], beta: &[f64]) -> Result<Factorization, SolveError> {
        if let Some(&x) = alpha.iter().chain(beta).find(|x| !(**x >= 0.0)) {
            return Err(SolveError::NegativeCoefficient(x));
        }
        if alpha.iter().chain(beta).all(|&x| x == 0.0) {
            return Err(SolveError::Singular);
        }
        let beta = self.expand_boundary(beta);
        let shift: Vec<f64> = (0..self.vertex_count())
            .map(|i| alpha[i] * self.interior_mass[i] + beta[i] * self.boundary_mass[i])
            .collect();
        Factorization::new(self.shifted(&shift))
    }

    /// Convenience for constant coefficients.
    pub fn factor_constant(&self, alpha: f64, beta: f64) -> Result<Factorization, SolveError> {
        self.factor(
            &vec![alpha; self.vertex_count()],
            &vec![beta; self.boundary_vertices.len()],
        )
    }

    fn shifted(&self, diag: &[f64]) -> CsMat<f64> {
        let mut m = self.stiffness.clone();
        for (i, d) in diag.iter().enumerate() {
            if let Some(x) = m.get_mut(i, i) {
                *x += d;
            }
        }
        m
    }

    /// Writes the stiffness matrix in MatrixMarket format.
    #[cfg(feature = "matrix-market")]
    pub fn write_matrix_market(&self, path: &std::path::Path) -> std::io::Result<()> {
        sprs::io::write_matrix_market(path, &self.stiffness)
    }

    /// Checks that `field` is a vertex field of the right length.
    pub(crate) fn conform_vertices(&self, field: &ScalarField) -> Result<(), FieldError> {
        conform(field, FieldDomain::Vertices, self.vertex_count())
    }

    pub(crate) fn conform_boundary(&self, field: &ScalarField) -> Result<(), FieldError> {
        conform(field, FieldDomain::Boundary, self.boundary_vertices.len())
    }
}

fn conform(field: &ScalarField, domain: FieldDomain, expected: usize) -> Result<(), FieldError> {
    if field.domain() != domain {
        return Err(FieldError::WrongDomain {
            expected: domain,
            found: field.domain(),
        });
    }
    if field.len() != expected {
        return Err(FieldError::LengthMismatch {
            domain,
            expected,
            found: field.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::LoadedMesh;
    use curvforge_testmesh as tm;

    fn ops(m: tm::MeshData) -> (LoadedMesh, EllipticOperators) {
        let d = LoadedMesh::from_positions(m.positions, m.triangles).unwrap();
        let o = EllipticOperators::assemble(&d.mesh, &d.metric);
        (d, o)
    }

    #[test]
    fn constants_in_kernel() {
        let (_, o) = ops(tm::pair_of_pants(0.25));
        let su = o.apply_stiffness(&vec![3.25; o.vertex_count()]);
        assert!(su.iter().all(|&x| x == 0.0));
        // the assembled matrix agrees to roundoff
        let ones = vec![1.0; o.vertex_count()];
        let mut sm = vec![0.0; o.vertex_count()];
        sprs::prod::mul_acc_mat_vec_csr(o.stiffness().view(), &ones[..], &mut sm[..]);
        assert!(sm.iter().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn stiffness_is_symmetric() {
        let (_, o) = ops(tm::perturbed_annulus(0, 0.2));
        let s = o.stiffness();
        for (v, (i, j)) in s.iter() {
            assert_eq!(Some(v), s.get(j, i));
        }
    }

    #[test]
    fn square_dirichlet_energy_of_x() {
        let (d, o) = ops(tm::unit_square());
        let x: Vec<f64> = d.positions.iter().map(|p| p[0]).collect();
        assert!((o.dirichlet_form(&x, &x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn masses() {
        let (d, o) = ops(tm::disk(5));
        assert!(o.interior_mass().iter().all(|&m| m > 0.0));
        for v in d.mesh.interior_vertices() {
            assert_eq!(o.boundary_mass()[v], 0.0);
        }
        assert!((o.volume() - d.metric.total_area(&d.mesh)).abs() < 1e-13);
        let perimeter: f64 = (0..d.mesh.edge_count())
            .filter(|&e| d.mesh.is_boundary_edge(e))
            .map(|e| d.metric.lengths()[e])
            .sum();
        assert!((o.boundary_length() - perimeter).abs() < 1e-13);
    }

    #[test]
    fn lattice_laplacian_of_r_squared_is_exact() {
        // away from the boundary the Delaunay disk is an equilateral lattice
        let (d, o) = ops(tm::delaunay_disk(0.1));
        let u: Vec<f64> = d
            .positions
            .iter()
            .map(|p| p[0] * p[0] + p[1] * p[1])
            .collect();
        let su = o.apply_stiffness(&u);
        let mut checked = 0;
        for v in d.mesh.interior_vertices() {
            let [x, y, _] = d.positions[v];
            if x * x + y * y < 0.6 {
                assert!((su[v] / o.interior_mass()[v] + 4.0).abs() < 1e-9);
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn delaunay_fixtures_have_nonnegative_weights() {
        for m in [
            tm::disk(6),
            tm::annulus_level(1),
            tm::pair_of_pants(0.15),
            tm::delaunay_disk(0.1),
        ] {
            let (_, o) = ops(m);
            assert!(o.weights_nonnegative(1e-12), "{}", o.min_edge_weight());
        }
    }
}
