use crate::field::{FieldDomain, ScalarField};
use crate::par;

use super::{MeshError, SurfaceMesh};

/// Angles, cotangents and area of one triangle, indexed by corner.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleGeometry {
    pub angles: [f64; 3],
    pub cotangents: [f64; 3],
    pub area: f64,
}

impl TriangleGeometry {
    /// `l[k]` is the length of the side opposite corner `k`. Returns `None`
    /// unless the strict triangle inequality holds.
    pub fn from_lengths(l: [f64; 3]) -> Option<Self> {
        let [a, b, c] = l;
        let x = b + c - a;
        let y = a - b + c;
        let z = a + b - c;
        if !(x > 0.0 && y > 0.0 && z > 0.0) {
            return None;
        }
        let area = heron(l);
        if !(area > 0.0) {
            return None;
        }
        let p = a + b + c;
        // half-angle form stays accurate for needle triangles
        let half = |opp: f64, s1: f64, s2: f64| 2.0 * ((s1 * s2) / (p * opp)).sqrt().atan();
        let angles = [half(x, y, z), half(y, x, z), half(z, x, y)];
        let cot = |k: usize| {
            let (o, s1, s2) = (l[k], l[(k + 1) % 3], l[(k + 2) % 3]);
            (s1 * s1 + s2 * s2 - o * o) / (4.0 * area)
        };
        Some(Self {
            angles,
            cotangents: [cot(0), cot(1), cot(2)],
            area,
        })
    }
}

/// Heron's formula in the cancellation-free ordering.
fn heron(l: [f64; 3]) -> f64 {
    let mut s = l;
    s.sort_by(|p, q| q.total_cmp(p));
    let [a, b, c] = s;
    let prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    0.25 * prod.max(0.0).sqrt()
}

/// Positive edge lengths satisfying the strict triangle inequality in every
/// triangle, indexed like [`SurfaceMesh::edges`].
#[derive(Clone, Debug, PartialEq)]
pub struct IntrinsicMetric {
    lengths: Vec<f64>,
}

impl IntrinsicMetric {
    pub fn new(mesh: &SurfaceMesh, lengths: Vec<f64>) -> Result<Self, MeshError> {
        if lengths.len() != mesh.edge_count() {
            return Err(MeshError::LengthCount {
                expected: mesh.edge_count(),
                found: lengths.len(),
            });
        }
        if let Some((edge, &length)) = lengths
            .iter()
            .enumerate()
            .find(|(_, l)| !(l.is_finite() && **l > 0.0))
        {
            return Err(MeshError::InvalidLength { edge, length });
        }
        let metric = Self { lengths };
        for t in 0..mesh.triangle_count() {
            let l = metric.triangle_lengths(mesh, t);
            if TriangleGeometry::from_lengths(l).is_none() {
                return Err(MeshError::TriangleInequality {
                    triangle: t,
                    lengths: l,
                });
            }
        }
        Ok(metric)
    }

    /// Euclidean lengths of the embedded edges.
    pub fn from_positions(mesh: &SurfaceMesh, positions: &[[f64; 3]]) -> Result<Self, MeshError> {
        let lengths = mesh
            .edges()
            .iter()
            .map(|&[a, b]| {
                let (p, q) = (positions[a], positions[b]);
                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
            })
            .collect();
        Self::new(mesh, lengths).map_err(|e| match e {
            MeshError::TriangleInequality { triangle, lengths } => MeshError::DegenerateTriangle {
                triangle,
                area: heron(lengths),
            },
            MeshError::InvalidLength { .. } => {
                let t = mesh
                    .triangles()
                    .iter()
                    .position(|tri| {
                        tri.iter()
                            .zip(tri.iter().cycle().skip(1))
                            .any(|(&a, &b)| positions[a] == positions[b])
                    })
                    .unwrap_or(0);
                MeshError::DegenerateTriangle {
                    triangle: t,
                    area: 0.0,
                }
            }
            other => other,
        })
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Side lengths of triangle `t`, opposite each corner.
    pub fn triangle_lengths(&self, mesh: &SurfaceMesh, t: usize) -> [f64; 3] {
        let e = mesh.triangle_edges()[t];
        [self.lengths[e[0]], self.lengths[e[1]], self.lengths[e[2]]]
    }

    pub fn triangle_geometry(&self, mesh: &SurfaceMesh, t: usize) -> TriangleGeometry {
        TriangleGeometry::from_lengths(self.triangle_lengths(mesh, t))
            .expect("metric invariant: triangle inequality")
    }

    /// Geometry of every triangle, in triangle order.
    pub fn all_triangle_geometry(&self, mesh: &SurfaceMesh) -> Vec<TriangleGeometry> {
        par::map_range(mesh.triangle_count(), |t| self.triangle_geometry(mesh, t))
    }

    pub fn obtuse_triangle_count(&self, mesh: &SurfaceMesh) -> usize {
        self.all_triangle_geometry(mesh)
            .iter()
            .filter(|g| g.cotangents.iter().any(|&c| c < -1e-12))
            .count()
    }

    /// Longest edge; used as the mesh size `h`.
    pub fn max_edge_length(&self) -> f64 {
        self.lengths.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_area(&self, mesh: &SurfaceMesh) -> f64 {
        self.all_triangle_geometry(mesh)
            .iter()
            .map(|g| g.area)
            .sum()
    }

    /// Vertex scaling `l_ij -> e^{(u_i + u_j)/2} l_ij`, the discrete form
    /// of `g -> e^{2u} g`.
    pub fn conformal_rescale(
        &self,
        mesh: &SurfaceMesh,
        u: &ScalarField,
    ) -> Result<Self, MeshError> {
        assert_eq!(
            u.domain(),
            FieldDomain::Vertices,
            "conformal factor must live on vertices"
        );
        self.rescale(mesh, u.values(), 1.0)
    }

    /// Lengths of `scale * e^{2u} g`.
    pub fn rescale(&self, mesh: &SurfaceMesh, u: &[f64], scale: f64) -> Result<Self, MeshError> {
        assert_eq!(u.len(), mesh.vertex_count());
        let root = scale.sqrt();
        let lengths = mesh
            .edges()
            .iter()
            .zip(&self.lengths)
            .map(|(&[a, b], &l)| root * (0.5 * (u[a] + u[b])).exp() * l)
            .collect();
        Self::new(mesh, lengths)
    }

    /// Lengths of `s * g`.
    pub fn scaled(&self, s: f64) -> Self {
        assert!(s > 0.0 && s.is_finite());
        let root = s.sqrt();
        Self {
            lengths: self.lengths.iter().map(|l| l * root).collect(),
        }
    }
}
