//! Unit-area triangulated surfaces: the round sphere and flat tori.
//!
//! A [`SurfaceMesh`] stores vertex positions in an unscaled embedding (the
//! sphere of radius `1/sqrt(4 pi)` or the fundamental domain of a lattice)
//! together with a uniform area factor `scale`. Every metric quantity
//! (areas, lengths, gradients) is measured in the scaled metric, whose
//! total area is exactly one.

mod cache;
mod icosphere;
mod torus;

pub use cache::{read_mesh_cache, write_mesh_cache};
pub use icosphere::{build_icosphere, MAX_ICOSPHERE_LEVEL};
pub use torus::{build_torus, Lattice};

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::linalg::{cross, dot, norm, sub};

/// Radius of the round sphere with area one.
pub fn unit_area_radius() -> f64 {
    1.0 / (4.0 * std::f64::consts::PI).sqrt()
}

/// Which closed surface a mesh discretizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Sphere { level: u32 },
    /// `basis` holds the two lattice generators as rows.
    Torus { basis: [[f64; 2]; 2], n: usize },
}

#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    pub kind: SurfaceKind,
    /// Positions; torus vertices carry a zero third coordinate.
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    /// Lumped area: one third of the scaled area of each incident triangle.
    pub vertex_area: Vec<f64>,
    pub genus: u32,
    /// Area factor applied to the embedding metric.
    pub scale: f64,
    checksum: String,
}

impl SurfaceMesh {
    pub(crate) fn from_parts(
        kind: SurfaceKind,
        vertices: Vec<[f64; 3]>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self> {
        let genus = match kind {
            SurfaceKind::Sphere { .. } => 0,
            SurfaceKind::Torus { .. } => 1,
        };
        let mut mesh = SurfaceMesh {
            kind,
            vertices,
            triangles,
            vertex_area: Vec::new(),
            genus,
            scale: 1.0,
            checksum: String::new(),
        };
        let raw: Vec<f64> = (0..mesh.triangles.len())
            .map(|t| mesh.raw_triangle_area(t))
            .collect();
        if let Some(t) = raw.iter().position(|&a| a <= 0.0 || !a.is_finite()) {
            return Err(invalid(format!("triangle {t} is degenerate")));
        }
        let total: f64 = raw.iter().sum();
        mesh.scale = 1.0 / total;
        let mut area = vec![0.0; mesh.vertices.len()];
        for (tri, a) in mesh.triangles.iter().zip(&raw) {
            for &v in tri {
                area[v] += mesh.scale * a / 3.0;
            }
        }
        mesh.vertex_area = area;
        mesh.checksum = mesh.compute_checksum();
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.kind, SurfaceKind::Sphere { .. })
    }

    /// SHA-256 over kind, scale and all arrays, hex encoded.
    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    fn compute_checksum(&self) -> String {
        let mut h = Sha256::new();
        match &self.kind {
            SurfaceKind::Sphere { level } => {
                h.update(b"sphere");
                h.update(level.to_le_bytes());
            }
            SurfaceKind::Torus { basis, n } => {
                h.update(b"torus");
                for x in basis.iter().flatten() {
                    h.update(x.to_bits().to_le_bytes());
                }
                h.update((*n as u64).to_le_bytes());
            }
        }
        h.update(self.scale.to_bits().to_le_bytes());
        for p in &self.vertices {
            for x in p {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        for t in &self.triangles {
            for &v in t {
                h.update((v as u64).to_le_bytes());
            }
        }
        for a in &self.vertex_area {
            h.update(a.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Displacement from vertex `i` to vertex `j` in the embedding; on a torus
    /// the minimum-image representative modulo the lattice.
    pub fn edge_vector(&self, i: usize, j: usize) -> [f64; 3] {
        Self::min_image(&self.kind, sub(self.vertices[j], self.vertices[i]))
    }

    /// Corner positions of triangle `t`, unwrapped so that the edges are the
    /// true triangle edges.
    pub fn triangle_corners(&self, t: usize) -> [[f64; 3]; 3] {
        let [i, j, k] = self.triangles[t];
        let p = self.vertices[i];
        let eij = self.edge_vector(i, j);
        let eik = self.edge_vector(i, k);
        [
            p,
            [p[0] + eij[0], p[1] + eij[1], p[2] + eij[2]],
            [p[0] + eik[0], p[1] + eik[1], p[2] + eik[2]],
        ]
    }

    fn raw_triangle_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_corners(t);
        0.5 * norm(cross(sub(p1, p0), sub(p2, p0)))
    }

    /// Area of triangle `t` in the unit-area metric.
    pub fn triangle_area(&self, t: usize) -> f64 {
        self.scale * self.raw_triangle_area(t)
    }

    pub fn total_area(&self) -> f64 {
        self.vertex_area.iter().sum()
    }

    /// Length of the edge `(i, j)` in the unit-area metric.
    pub fn edge_length(&self, i: usize, j: usize) -> f64 {
        self.scale.sqrt() * norm(self.edge_vector(i, j))
    }

    /// Sorted unique undirected edges.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.edges().len() as i64 + self.num_triangles() as i64
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges()
            .iter()
            .map(|&(i, j)| self.edge_length(i, j))
            .fold(0.0, f64::max)
    }

    /// Largest triangle diameter (longest edge) in the unit-area metric.
    pub fn max_triangle_diameter(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                self.edge_length(a, b)
                    .max(self.edge_length(b, c))
                    .max(self.edge_length(c, a))
            })
            .fold(0.0, f64::max)
    }

    /// True when every directed edge is matched by exactly one reversed edge.
    pub fn is_consistently_oriented(&self) -> bool {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for &[a, b, c] in &self.triangles {
            for e in [(a, b), (b, c), (c, a)] {
                *directed.entry(e).or_default() += 1;
            }
        }
        directed
            .iter()
            .all(|(&(a, b), &count)| count == 1 && directed.get(&(b, a)) == Some(&1))
    }

    /// Vertex adjacency lists, sorted.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_vertices()];
        for (i, j) in self.edges() {
            adj[i].push(j);
            adj[j].push(i);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices();
        if n == 0 {
            return false;
        }
        let adj = self.neighbors();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == n
    }

    /// Vertex `v` as a point of the unit sphere (sphere meshes only).
    pub fn unit_sphere_point(&self, v: usize) -> [f64; 3] {
        let p = self.vertices[v];
        let r = norm(p);
        [p[0] / r, p[1] / r, p[2] / r]
    }

    /// Vertex positions on the unit sphere (sphere meshes only).
    pub fn unit_sphere_points(&self) -> Vec<[f64; 3]> {
        (0..self.num_vertices()).map(|v| self.unit_sphere_point(v)).collect()
    }

    /// Fractional lattice coordinates of vertex `v` (torus meshes only).
    pub fn lattice_coords(&self, v: usize) -> Option<[f64; 2]> {
        match &self.kind {
            SurfaceKind::Torus { basis, .. } => {
                let [[a, b], [c, e]] = *basis;
                let det = a * e - b * c;
                let d = self.vertices[v];
                let s = (d[0] * e - d[1] * c) / det;
                let t = (a * d[1] - b * d[0]) / det;
                Some([s, t])
            }
            SurfaceKind::Sphere { .. } => None,
        }
    }

    /// Vertex nearest to `point` (a unit-sphere direction on spheres, an
    /// embedding position on tori).
    pub fn nearest_vertex(&self, point: [f64; 3]) -> usize {
        let dist = |v: usize| -> f64 {
            match self.kind {
                SurfaceKind::Sphere { .. } => -dot(self.unit_sphere_point(v), point),
                SurfaceKind::Torus { .. } => {
                    let d = Self::min_image(&self.kind, sub(point, self.vertices[v]));
                    dot(d, d)
                }
            }
        };
        (0..self.num_vertices())
            .min_by(|&a, &b| dist(a).total_cmp(&dist(b)))
            .unwrap_or(0)
    }

    fn min_image(kind: &SurfaceKind, d: [f64; 3]) -> [f64; 3] {
        match kind {
            SurfaceKind::Sphere { .. } => d,
            SurfaceKind::Torus { basis, .. } => {
                let [[a, b], [c, e]] = *basis;
                let det = a * e - b * c;
                let s = (d[0] * e - d[1] * c) / det;
                let t = (a * d[1] - b * d[0]) / det;
                let (s, t) = (s - s.round(), t - t.round());
                [s * a + t * c, s * b + t * e, 0.0]
            }
        }
    }
}
