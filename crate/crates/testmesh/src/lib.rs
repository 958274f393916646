//! Synthetic triangulated surfaces with boundary.
//!
//! These generators exist to feed tests and benchmarks; they return plain
//! vertex positions and counter-clockwise triangles so that the consumer
//! exercises its own loaders and validators.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

#[derive(Clone, Debug)]
pub struct MeshData {
    pub positions: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl MeshData {
    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    /// ASCII OFF with full `{:e}` precision.
    pub fn to_off(&self) -> String {
        let mut s = String::from("OFF\n");
        let _ = writeln!(s, "{} {} 0", self.positions.len(), self.triangles.len());
        for p in &self.positions {
            let _ = writeln!(s, "{:e} {:e} {:e}", p[0], p[1], p[2]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for p in &self.positions {
            let _ = writeln!(s, "v {:e} {:e} {:e}", p[0], p[1], p[2]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s
    }

    /// Sets `z = height(x, y)` for every vertex.
    pub fn lifted(mut self, height: impl Fn(f64, f64) -> f64) -> Self {
        for p in &mut self.positions {
            p[2] = height(p[0], p[1]);
        }
        self
    }
}

/// One triangle with unit edge lengths.
pub fn single_triangle() -> MeshData {
    MeshData {
        positions: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.75f64.sqrt(), 0.0]],
        triangles: vec![[0, 1, 2]],
    }
}

/// Unit square split along its diagonal into two right triangles.
pub fn unit_square() -> MeshData {
    MeshData {
        positions: vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
        ],
        triangles: vec![[0, 1, 2], [0, 2, 3]],
    }
}

/// Stitches an inner ring to an outer ring (both counter-clockwise),
/// always advancing along whichever ring has the smaller next angle.
fn zip_rings(
    inner: &[usize],
    inner_angles: &[f64],
    outer: &[usize],
    outer_angles: &[f64],
    triangles: &mut Vec<[usize; 3]>,
) {
    let (na, nb) = (inner.len(), outer.len());
    let unwrap = |angles: &[f64], k: usize| {
        let n = angles.len();
        angles[k % n] + 2.0 * PI * (k / n) as f64
    };
    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        let advance_inner = if j == nb {
            true
        } else if i == na {
            false
        } else {
            unwrap(inner_angles, i + 1) <= unwrap(outer_angles, j + 1)
        };
        if advance_inner {
            triangles.push([inner[i % na], outer[j % nb], inner[(i + 1) % na]]);
            i += 1;
        } else {
            triangles.push([inner[i % na], outer[j % nb], outer[(j + 1) % nb]]);
            j += 1;
        }
    }
}

/// Concentric-ring disk of radius 1: a centre vertex plus rings with the
/// given vertex counts at radii `k / rings.len()`.
pub fn disk_with_rings(ring_sizes: &[usize]) -> MeshData {
    let n = ring_sizes.len();
    let mut positions = vec![[0.0, 0.0, 0.0]];
    let mut rings: Vec<(Vec<usize>, Vec<f64>)> = Vec::with_capacity(n);
    for (k, &m) in ring_sizes.iter().enumerate() {
        let r = (k + 1) as f64 / n as f64;
        let offset = if k % 2 == 1 { 0.5 } else { 0.0 };
        let mut ids = Vec::with_capacity(m);
        let mut angles = Vec::with_capacity(m);
        for j in 0..m {
            let th = 2.0 * PI * (j as f64 + offset) / m as f64;
            ids.push(positions.len());
            angles.push(th);
            positions.push([r * th.cos(), r * th.sin(), 0.0]);
        }
        rings.push((ids, angles));
    }
    let mut triangles = Vec::new();
    let (first, _) = &rings[0];
    for j in 0..first.len() {
        triangles.push([0, first[j], first[(j + 1) % first.len()]]);
    }
    for w in rings.windows(2) {
        zip_rings(&w[0].0, &w[0].1, &w[1].0, &w[1].1, &mut triangles);
    }
    MeshData {
        positions,
        triangles,
    }
}

/// Unit disk with `rings` rings of `6k` vertices: near-equilateral and
/// Delaunay for every resolution used in the tests.
pub fn disk(rings: usize) -> MeshData {
    let sizes: Vec<usize> = (1..=rings).map(|k| 6 * k).collect();
    disk_with_rings(&sizes)
}

/// Unit disk built from the image of a regular triangular lattice under
/// `exp`: `angular` vertices per ring, ring radii shrinking geometrically
/// down to `r_min`, closed by a centre fan. Stars vary smoothly from ring to
/// ring, which keeps pointwise curvature errors second order.
pub fn log_polar_disk(angular: usize, r_min: f64) -> MeshData {
    let step = 2.0 * PI / angular as f64 * 3f64.sqrt() / 2.0;
    let count = ((1.0 / r_min).ln() / step).ceil() as usize;
    let mut positions = vec![[0.0, 0.0, 0.0]];
    let mut rings = Vec::with_capacity(count + 1);
    for k in 0..=count {
        let r = (-((count - k) as f64) * step).exp();
        let offset = 0.5 * (count - k) as f64;
        let mut ids = Vec::with_capacity(angular);
        let mut angles = Vec::with_capacity(angular);
        for j in 0..angular {
            let th = 2.0 * PI * (j as f64 + offset) / angular as f64;
            ids.push(positions.len());
            angles.push(th);
            positions.push([r * th.cos(), r * th.sin(), 0.0]);
        }
        rings.push((ids, angles));
    }
    let mut triangles = Vec::new();
    let first: &Vec<usize> = &rings[0].0;
    for j in 0..angular {
        triangles.push([0, first[j], first[(j + 1) % angular]]);
    }
    for w in rings.windows(2) {
        zip_rings(&w[0].0, &w[0].1, &w[1].0, &w[1].1, &mut triangles);
    }
    MeshData {
        positions,
        triangles,
    }
}

/// Twelve-vertex disk (centre, 5 and 6 vertex rings).
pub fn tiny_disk() -> MeshData {
    disk_with_rings(&[5, 6])
}

/// Planar annulus with `radial + 1` rings of `angular` vertices each,
/// alternate rings staggered by half a step.
pub fn annulus(inner: f64, outer: f64, radial: usize, angular: usize) -> MeshData {
    let mut positions = Vec::new();
    let mut rings = Vec::new();
    for i in 0..=radial {
        let r = inner + (outer - inner) * i as f64 / radial as f64;
        let offset = 0.5 * i as f64;
        let mut ids = Vec::with_capacity(angular);
        let mut angles = Vec::with_capacity(angular);
        for j in 0..angular {
            let th = 2.0 * PI * (j as f64 + offset) / angular as f64;
            ids.push(positions.len());
            angles.push(th);
            positions.push([r * th.cos(), r * th.sin(), 0.0]);
        }
        rings.push((ids, angles));
    }
    let mut triangles = Vec::new();
    for w in rings.windows(2) {
        zip_rings(&w[0].0, &w[0].1, &w[1].0, &w[1].1, &mut triangles);
    }
    MeshData {
        positions,
        triangles,
    }
}

/// Annulus `0.5 <= r <= 1` at refinement `level` (0 is the coarsest).
pub fn annulus_level(level: u32) -> MeshData {
    let s = 1usize << level;
    annulus(0.5, 1.0, 3 * s, 24 * s)
}

/// Spherical cap of the unit sphere from the pole down to polar angle
/// `polar_max`, built on the ring layout of [`disk`].
pub fn spherical_cap(rings: usize, polar_max: f64) -> MeshData {
    let mut mesh = disk(rings);
    for p in &mut mesh.positions {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let phi = r * polar_max;
        let (s, c) = phi.sin_cos();
        let (cx, sy) = if r > 0.0 {
            (p[0] / r, p[1] / r)
        } else {
            (0.0, 0.0)
        };
        *p = [s * cx, s * sy, c];
    }
    mesh
}

/// Upper unit hemisphere; its boundary is a great circle.
pub fn hemisphere(rings: usize) -> MeshData {
    spherical_cap(rings, FRAC_PI_2)
}

/// Unit disk with two circular holes of radius 0.2 centred at `(±0.45, 0)`,
/// triangulated by constrained Delaunay with target spacing `h`.
pub fn pair_of_pants(h: f64) -> MeshData {
    delaunay_domain(h, &[(-0.45, 0.0, 0.2), (0.45, 0.0, 0.2)])
}

/// Unit disk triangulated by Delaunay from a hexagonal lattice of spacing
/// `h` and boundary points spaced about `h` apart.
pub fn delaunay_disk(h: f64) -> MeshData {
    delaunay_domain(h, &[])
}

/// Unit disk minus circular `holes` `(cx, cy, r)`: hexagonal lattice points
/// inside, evenly spaced points on every circle, constrained Delaunay.
fn delaunay_domain(h: f64, holes: &[(f64, f64, f64)]) -> MeshData {
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::new();
    let mut circle = |cx: f64, cy: f64, r: f64| {
        let m = ((2.0 * PI * r / h).ceil() as usize).max(8);
        let pts: Vec<Point2<f64>> = (0..m)
            .map(|j| {
                let th = 2.0 * PI * j as f64 / m as f64;
                Point2::new(cx + r * th.cos(), cy + r * th.sin())
            })
            .collect();
        let handles: Vec<_> = pts
            .iter()
            .map(|&p| cdt.insert(p).expect("finite point"))
            .collect();
        for j in 0..m {
            cdt.add_constraint(handles[j], handles[(j + 1) % m]);
        }
    };
    circle(0.0, 0.0, 1.0);
    for &(cx, cy, r) in holes {
        circle(cx, cy, r);
    }
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = (1.0 / dy).ceil() as i64;
    for row in -rows..=rows {
        let y = row as f64 * dy;
        let shift = if row.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        let cols = (1.0 / h).ceil() as i64 + 1;
        for col in -cols..=cols {
            let x = col as f64 * h + shift;
            let keep_outer = (x * x + y * y).sqrt() < 1.0 - 0.6 * h;
            let keep_holes = holes
                .iter()
                .all(|&(cx, cy, r)| ((x - cx).powi(2) + (y - cy).powi(2)).sqrt() > r + 0.6 * h);
            if keep_outer && keep_holes {
                cdt.insert(Point2::new(x, y)).expect("finite point");
            }
        }
    }

    let positions: Vec<[f64; 3]> = cdt
        .vertices()
        .map(|v| [v.position().x, v.position().y, 0.0])
        .collect();
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        let vs = face.vertices();
        let ids = [
            vs[0].fix().index(),
            vs[1].fix().index(),
            vs[2].fix().index(),
        ];
        let (mut cx, mut cy) = (0.0, 0.0);
        for &i in &ids {
            cx += positions[i][0] / 3.0;
            cy += positions[i][1] / 3.0;
        }
        let inside = (cx * cx + cy * cy).sqrt() < 1.0
            && holes
                .iter()
                .all(|&(hx, hy, r)| ((cx - hx).powi(2) + (cy - hy).powi(2)).sqrt() > r);
        if inside {
            triangles.push(ids);
        }
    }
    MeshData {
        positions,
        triangles,
    }
}

/// Smooth bump of height `amplitude` centred at `(x0, y0)` with width `width`.
pub fn bump(amplitude: f64, x0: f64, y0: f64, width: f64) -> impl Fn(f64, f64) -> f64 {
    move |x, y| amplitude * (-((x - x0).powi(2) + (y - y0).powi(2)) / (width * width)).exp()
}

/// Annulus with a Gaussian bump lifted out of the plane.
pub fn bumped_annulus(level: u32, amplitude: f64) -> MeshData {
    annulus_level(level).lifted(bump(amplitude, 0.75, 0.0, 0.3))
}

/// Annulus whose interior vertices are displaced deterministically in the
/// plane and out of it; boundary rings are left untouched.
pub fn perturbed_annulus(level: u32, amount: f64) -> MeshData {
    let mut mesh = annulus_level(level);
    let h = 0.5 / (3 * (1usize << level)) as f64;
    for (i, p) in mesh.positions.iter_mut().enumerate() {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if !(0.5 + 1e-9..=1.0 - 1e-9).contains(&r) {
            continue;
        }
        let t = i as f64;
        p[0] += amount * h * (1.7 * t).sin();
        p[1] += amount * h * (2.3 * t).cos();
        p[2] += amount * h * (0.9 * t).sin();
    }
    mesh
}

/// Polyhedral cylinder of radius 1 and height `height`: `rings + 1`
/// aligned rings of `angular` vertices, each planar rectangle split into
/// two triangles. Intrinsically flat with geodesic boundary.
pub fn cylinder(angular: usize, rings: usize, height: f64) -> MeshData {
    let mut positions = Vec::with_capacity(angular * (rings + 1));
    for i in 0..=rings {
        let z = height * i as f64 / rings as f64;
        for j in 0..angular {
            let th = 2.0 * PI * j as f64 / angular as f64;
            positions.push([th.cos(), th.sin(), z]);
        }
    }
    let id = |i: usize, j: usize| i * angular + j % angular;
    let mut triangles = Vec::with_capacity(2 * angular * rings);
    for i in 0..rings {
        for j in 0..angular {
            let (a, b, c, d) = (id(i, j), id(i, j + 1), id(i + 1, j + 1), id(i + 1, j));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    MeshData {
        positions,
        triangles,
    }
}

/// Planar square `[0,1]^2` grid with `n x n` cells split along alternating
/// diagonals; all triangles are right isosceles.
pub fn square_grid(n: usize) -> MeshData {
    let mut positions = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            positions.push([i as f64 / n as f64, j as f64 / n as f64, 0.0]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    MeshData {
        positions,
        triangles,
    }
}
