use std::f64::consts::PI;

use super::{IntrinsicMetric, SurfaceMesh};

/// Angle-defect curvature of a piecewise-flat metric.
///
/// Per-vertex vectors are indexed by vertex; per-boundary vectors by
/// boundary slot (see [`SurfaceMesh::boundary_vertices`]).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteCurvature {
    pub angle_sum: Vec<f64>,
    /// `2π - angle_sum` at interior vertices, zero on the boundary.
    pub interior_defect: Vec<f64>,
    /// `π - angle_sum` per boundary slot.
    pub boundary_turning: Vec<f64>,
    /// One third of the incident triangle areas.
    pub dual_area: Vec<f64>,
    /// Half the two incident boundary edge lengths.
    pub boundary_dual_length: Vec<f64>,
}

impl DiscreteCurvature {
    pub fn compute(mesh: &SurfaceMesh, metric: &IntrinsicMetric) -> Self {
        let geometry = metric.all_triangle_geometry(mesh);
        let n = mesh.vertex_count();
        let mut angle_sum = vec![0.0; n];
        let mut dual_area = vec![0.0; n];
        for (tri, g) in mesh.triangles().iter().zip(&geometry) {
            for k in 0..3 {
                angle_sum[tri[k]] += g.angles[k];
                dual_area[tri[k]] += g.area / 3.0;
            }
        }
        let mut interior_defect = vec![0.0; n];
        for v in mesh.interior_vertices() {
            interior_defect[v] = 2.0 * PI - angle_sum[v];
        }
        let lengths = metric.lengths();
        let boundary = mesh.boundary_vertices();
        let boundary_turning = boundary.iter().map(|&v| PI - angle_sum[v]).collect();
        let boundary_dual_length = (0..boundary.len())
            .map(|s| {
                let [a, b] = mesh.boundary_slot_edges(s);
                0.5 * (lengths[a] + lengths[b])
            })
            .collect();
        Self {
            angle_sum,
            interior_defect,
            boundary_turning,
            dual_area,
            boundary_dual_length,
        }
    }

    /// Total defect plus total turning.
    pub fn total(&self) -> f64 {
        self.interior_defect.iter().sum::<f64>() + self.boundary_turning.iter().sum::<f64>()
    }

    /// Defect over dual area at interior vertices; zero at boundary vertices.
    pub fn gaussian_density(&self) -> Vec<f64> {
        self.interior_defect
            .iter()
            .zip(&self.dual_area)
            .map(|(d, a)| d / a)
            .collect()
    }

    /// Turning over boundary dual length, per boundary slot.
    pub fn geodesic_density(&self) -> Vec<f64> {
        self.boundary_turning
            .iter()
            .zip(&self.boundary_dual_length)
            .map(|(t, l)| t / l)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::LoadedMesh;
    use curvforge_testmesh as tm;

    fn load(m: tm::MeshData) -> LoadedMesh {
        LoadedMesh::from_positions(m.positions, m.triangles).unwrap()
    }

    #[test]
    fn equilateral_triangle_turning() {
        let d = load(tm::single_triangle());
        let c = DiscreteCurvature::compute(&d.mesh, &d.metric);
        for t in &c.boundary_turning {
            assert!((t - 2.0 * PI / 3.0).abs() < 1e-15);
        }
        assert!((c.total() - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn flat_disk_has_no_defect() {
        let d = load(tm::disk(4));
        let c = DiscreteCurvature::compute(&d.mesh, &d.metric);
        assert!(c.interior_defect.iter().all(|x| x.abs() < 1e-13));
        assert!((c.boundary_turning.iter().sum::<f64>() - 2.0 * PI).abs() < 1e-12);
        let area: f64 = c.dual_area.iter().sum();
        assert!((area - d.metric.total_area(&d.mesh)).abs() < 1e-14);
    }

    #[test]
    fn relabeling_permutes_curvature() {
        let m = tm::annulus_level(0);
        let n = m.vertex_count();
        // reverse the vertex order
        let perm: Vec<usize> = (0..n).rev().collect();
        let mut positions = vec![[0.0; 3]; n];
        for (v, p) in m.positions.iter().enumerate() {
            positions[perm[v]] = *p;
        }
        let tris = m.triangles.iter().map(|t| t.map(|v| perm[v])).collect();
        let a = load(m);
        let b = LoadedMesh::from_positions(positions, tris).unwrap();
        let ca = DiscreteCurvature::compute(&a.mesh, &a.metric);
        let cb = DiscreteCurvature::compute(&b.mesh, &b.metric);
        for (v, &w) in perm.iter().enumerate() {
            assert!((ca.angle_sum[v] - cb.angle_sum[w]).abs() < 1e-14);
            assert!((ca.dual_area[v] - cb.dual_area[w]).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_scaling_law() {
        let d = load(tm::hemisphere(4));
        let c = DiscreteCurvature::compute(&d.mesh, &d.metric);
        let s = 3.7;
        let cs = DiscreteCurvature::compute(&d.mesh, &d.metric.scaled(s));
        let (k, ks) = (c.gaussian_density(), cs.gaussian_density());
        for v in d.mesh.interior_vertices() {
            assert!((ks[v] - k[v] / s).abs() < 1e-10 * k[v].abs().max(1.0));
        }
        for (g, gs) in c.geodesic_density().iter().zip(cs.geodesic_density()) {
            assert!((gs - g / s.sqrt()).abs() < 1e-10 * g.abs().max(1.0));
        }
    }
}
