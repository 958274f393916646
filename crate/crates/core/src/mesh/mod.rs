//! Triangulated surfaces with boundary, their intrinsic metrics and
//! angle-defect curvature.

mod curvature;
pub mod io;
mod metric;

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

pub use curvature::DiscreteCurvature;
pub use io::MeshFormat;
pub use metric::{IntrinsicMetric, TriangleGeometry};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("unknown mesh format for {0} (expected .off or .obj)")]
    UnknownFormat(String),
    #[error("mesh has no triangles")]
    Empty,
    #[error("face {face} has {arity} vertices; only triangles are supported")]
    NonTriangle { face: usize, arity: usize },
    #[error("triangle {triangle} references vertex {vertex} but the mesh has {count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        vertex: usize,
        count: usize,
    },
    #[error("triangle {0} repeats a vertex")]
    RepeatedVertex(usize),
    #[error("edge ({a}, {b}) is shared by {faces} triangles")]
    NonManifoldEdge { a: usize, b: usize, faces: usize },
    #[error("vertex {0} is not manifold: its triangle fan is not connected")]
    NonManifoldVertex(usize),
    #[error("mesh is not orientable")]
    NonOrientable,
    #[error("mesh is disconnected ({0} components)")]
    Disconnected(usize),
    #[error("vertex {0} is not used by any triangle")]
    IsolatedVertex(usize),
    #[error("mesh has no boundary")]
    NoBoundary,
    #[error("triangle {triangle} is degenerate (area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("expected {expected} edge lengths, got {found}")]
    LengthCount { expected: usize, found: usize },
    #[error("edge {edge} has invalid length {length}")]
    InvalidLength { edge: usize, length: f64 },
    #[error("triangle {triangle} violates the triangle inequality with lengths {lengths:?}")]
    TriangleInequality { triangle: usize, lengths: [f64; 3] },
}

/// Combinatorics of a connected, oriented triangulated surface with
/// non-empty boundary.
///
/// Triangles are stored counter-clockwise with respect to a consistent
/// orientation. Edge `triangle_edges()[t][k]` is the edge opposite corner
/// `k` of triangle `t`. Boundary loops keep the surface on their left.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    vertex_count: usize,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    edge_faces: Vec<(usize, Option<usize>)>,
    boundary_loops: Vec<Vec<usize>>,
    boundary_vertices: Vec<usize>,
    boundary_slot: Vec<Option<usize>>,
    // (incoming, outgoing) boundary edge for each boundary slot
    boundary_slot_edges: Vec<[usize; 2]>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// +1 if `t` traverses `a -> b`, -1 if it traverses `b -> a`.
fn direction(t: &[usize; 3], a: usize, b: usize) -> i8 {
    for k in 0..3 {
        if t[k] == a && t[(k + 1) % 3] == b {
            return 1;
        }
        if t[k] == b && t[(k + 1) % 3] == a {
            return -1;
        }
    }
    0
}

impl SurfaceMesh {
    /// Validates and orients a triangle list.
    ///
    /// Inconsistently oriented input is re-oriented to agree with the first
    /// triangle; a Möbius-type contradiction is reported as
    /// [`MeshError::NonOrientable`].
    pub fn new(vertex_count: usize, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= vertex_count) {
                return Err(MeshError::IndexOutOfRange {
                    triangle: t,
                    vertex: v,
                    count: vertex_count,
                });
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedVertex(t));
            }
        }

        let mut incident: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                incident
                    .entry(edge_key(tri[k], tri[(k + 1) % 3]))
                    .or_default()
                    .push(t);
            }
        }
        // report the lowest offending edge so errors are deterministic
        if let Some((&(a, b), faces)) = incident
            .iter()
            .filter(|(_, f)| f.len() > 2)
            .min_by_key(|(k, _)| **k)
        {
            return Err(MeshError::NonManifoldEdge {
                a,
                b,
                faces: faces.len(),
            });
        }

        let mut used = vec![false; vertex_count];
        triangles.iter().flatten().for_each(|&v| used[v] = true);
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(MeshError::IsolatedVertex(v));
        }
        let mut components = UnionFind::new(triangles.len());
        for faces in incident.values() {
            if faces.len() == 2 {
                components.union(faces[0], faces[1]);
            }
        }
        let roots = (0..triangles.len())
            .filter(|&t| components.find(t) == t)
            .count();
        if roots > 1 {
            return Err(MeshError::Disconnected(roots));
        }

        let triangles = Self::orient(triangles, &incident)?;

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_faces: Vec<(usize, Option<usize>)> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = edge_key(a, b);
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_faces.push((t, None));
                    edges.len() - 1
                });
                if edge_faces[e].0 != t {
                    edge_faces[e].1 = Some(t);
                }
                te[k] = e;
            }
            triangle_edges.push(te);
        }

        // Corners (3t + k) around each vertex must form one fan.
        let mut fans = UnionFind::new(3 * triangles.len());
        let corner = |t: usize, v: usize| {
            3 * t
                + triangles[t]
                    .iter()
                    .position(|&w| w == v)
                    .expect("vertex in triangle")
        };
        for (e, &(t1, t2)) in edge_faces.iter().enumerate() {
            if let Some(t2) = t2 {
                for &v in &edges[e] {
                    fans.union(corner(t1, v), corner(t2, v));
                }
            }
        }
        let mut fan_root: Vec<Option<usize>> = vec![None; vertex_count];
        for (t, tri) in triangles.iter().enumerate() {
            for (k, &v) in tri.iter().enumerate() {
                let r = fans.find(3 * t + k);
                match fan_root[v] {
                    None => fan_root[v] = Some(r),
                    Some(r0) if r0 != r => return Err(MeshError::NonManifoldVertex(v)),
                    _ => {}
                }
            }
        }

        let mut next: Vec<Option<(usize, usize)>> = vec![None; vertex_count];
        let mut has_incoming = vec![false; vertex_count];
        for (e, &(t, other)) in edge_faces.iter().enumerate() {
            if other.is_some() {
                continue;
            }
            let tri = &triangles[t];
            let k = triangle_edges[t]
                .iter()
                .position(|&x| x == e)
                .expect("edge of face");
            let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            if next[a].is_some() || has_incoming[b] {
                return Err(MeshError::NonManifoldVertex(if next[a].is_some() {
                    a
                } else {
                    b
                }));
            }
            next[a] = Some((b, e));
            has_incoming[b] = true;
        }

        let mut boundary_loops = Vec::new();
        let mut boundary_vertices = Vec::new();
        let mut boundary_slot = vec![None; vertex_count];
        let mut outgoing_edge = Vec::new();
        for start in 0..vertex_count {
            if next[start].is_none() || boundary_slot[start].is_some() {
                continue;
            }
            let mut lp = Vec::new();
            let mut v = start;
            loop {
                boundary_slot[v] = Some(boundary_vertices.len());
                boundary_vertices.push(v);
                lp.push(v);
                let (w, e) = next[v].ok_or(MeshError::NonManifoldVertex(v))?;
                outgoing_edge.push(e);
                if w == start {
                    break;
                }
                if boundary_slot[w].is_some() {
                    return Err(MeshError::NonManifoldVertex(w));
                }
                v = w;
            }
            boundary_loops.push(lp);
        }
        if boundary_loops.is_empty() {
            return Err(MeshError::NoBoundary);
        }
        let mut boundary_slot_edges = vec![[0usize; 2]; boundary_vertices.len()];
        let mut offset = 0;
        for lp in &boundary_loops {
            let n = lp.len();
            for k in 0..n {
                let s = offset + k;
                let prev = offset + (k + n - 1) % n;
                boundary_slot_edges[s] = [outgoing_edge[prev], outgoing_edge[s]];
            }
            offset += n;
        }

        Ok(Self {
            vertex_count,
            triangles,
            edges,
            triangle_edges,
            edge_faces,
            boundary_loops,
            boundary_vertices,
            boundary_slot,
            boundary_slot_edges,
        })
    }

    fn orient(
        mut triangles: Vec<[usize; 3]>,
        incident: &HashMap<(usize, usize), Vec<usize>>,
    ) -> Result<Vec<[usize; 3]>, MeshError> {
        let n = triangles.len();
        let mut flip: Vec<Option<bool>> = vec![None; n];
        flip[0] = Some(false);
        let mut stack = vec![0usize];
        while let Some(t) = stack.pop() {
            let ft = flip[t].expect("visited");
            let tri = triangles[t];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let dir_t = if ft { -1 } else { 1 };
                for &s in &incident[&edge_key(a, b)] {
                    if s == t {
                        continue;
                    }
                    // neighbour must traverse the shared edge the other way
                    let needs_flip = direction(&triangles[s], a, b) * dir_t == 1;
                    match flip[s] {
                        None => {
                            flip[s] = Some(needs_flip);
                            stack.push(s);
                        }
                        Some(f) if f != needs_flip => return Err(MeshError::NonOrientable),
                        _ => {}
                    }
                }
            }
        }
        for (tri, f) in triangles.iter_mut().zip(&flip) {
            if f == &Some(true) {
                tri.swap(1, 2);
            }
        }
        Ok(triangles)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Edges as `[min, max]` vertex pairs.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn edge_faces(&self, edge: usize) -> (usize, Option<usize>) {
        self.edge_faces[edge]
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.edge_faces[edge].1.is_none()
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    /// Boundary vertices, loop after loop. Boundary fields are indexed in
    /// this order.
    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    /// Position of `v` in [`Self::boundary_vertices`], if it is on the boundary.
    pub fn boundary_slot(&self, v: usize) -> Option<usize> {
        self.boundary_slot[v]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_slot[v].is_some()
    }

    /// Incoming and outgoing boundary edges at a boundary slot.
    pub fn boundary_slot_edges(&self, slot: usize) -> [usize; 2] {
        self.boundary_slot_edges[slot]
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertex_count).filter(|&v| self.boundary_slot[v].is_none())
    }

    /// V - E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    /// Per-vertex vector with `boundary` values at boundary vertices and
    /// zeros elsewhere.
    pub fn expand_boundary(&self, boundary: &[f64]) -> Vec<f64> {
        assert_eq!(boundary.len(), self.boundary_vertices.len());
        let mut out = vec![0.0; self.vertex_count];
        for (&v, &x) in self.boundary_vertices.iter().zip(boundary) {
            out[v] = x;
        }
        out
    }

    pub fn restrict_to_boundary(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.vertex_count);
        self.boundary_vertices.iter().map(|&v| values[v]).collect()
    }
}

/// A mesh as read from disk. Positions are retained only to evaluate
/// user field expressions; all geometry flows through `metric`.
#[derive(Clone, Debug)]
pub struct LoadedMesh {
    pub mesh: SurfaceMesh,
    pub metric: IntrinsicMetric,
    pub positions: Vec<[f64; 3]>,
    pub warnings: Vec<String>,
}

impl LoadedMesh {
    pub fn from_positions(
        positions: Vec<[f64; 3]>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self, MeshError> {
        let mesh = SurfaceMesh::new(positions.len(), triangles)?;
        let metric = IntrinsicMetric::from_positions(&mesh, &positions)?;
        let mut warnings = Vec::new();
        let obtuse = metric.obtuse_triangle_count(&mesh);
        if obtuse > 0 {
            warnings.push(format!(
                "{obtuse} obtuse triangle(s): cotangent weights may be negative and discrete \
                 maximum principles may not apply"
            ));
        }
        Ok(Self {
            mesh,
            metric,
            positions,
            warnings,
        })
    }
}

/// Reads an ASCII OFF or OBJ file. The format is taken from the extension
/// unless given explicitly.
pub fn load_mesh(path: &Path, format: Option<MeshFormat>) -> Result<LoadedMesh, MeshError> {
    let format = match format {
        Some(f) => f,
        None => MeshFormat::from_path(path)
            .ok_or_else(|| MeshError::UnknownFormat(path.display().to_string()))?,
    };
    let text = std::fs::read_to_string(path)?;
    let (positions, faces) = match format {
        MeshFormat::Off => io::parse_off(&text)?,
        MeshFormat::Obj => io::parse_obj(&text)?,
    };
    LoadedMesh::from_positions(positions, faces)
}
