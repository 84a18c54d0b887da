use serde::{Deserialize, Serialize};

use super::{SurfaceKind, SurfaceMesh};
use crate::error::{invalid, Result};

/// Lattice whose quotient of the plane is the flat torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lattice {
    /// Z(1,0) + Z(0,1).
    Clifford,
    /// Z(1,0) + Z(1/2, sqrt(3)/2).
    Equilateral,
    Custom([[f64; 2]; 2]),
}

impl Lattice {
    pub fn basis(&self) -> [[f64; 2]; 2] {
        match self {
            Lattice::Clifford => [[1.0, 0.0], [0.0, 1.0]],
            Lattice::Equilateral => [[1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]],
            Lattice::Custom(b) => *b,
        }
    }
}

/// Structured `n x n` grid over the fundamental domain, each cell split along
/// its `b1 - b2` diagonal into two triangles, with periodic identification.
pub fn build_torus(lattice: &Lattice, n: usize) -> Result<SurfaceMesh> {
    if n < 4 {
        return Err(invalid(format!("torus resolution {n} is below 4")));
    }
    let basis = lattice.basis();
    let [[a, b], [c, d]] = basis;
    let det = a * d - b * c;
    let scale = (a.hypot(b) * c.hypot(d)).max(f64::MIN_POSITIVE);
    if !det.is_finite() || det.abs() <= 1e-12 * scale {
        return Err(invalid("lattice basis is degenerate"));
    }
    let idx = |i: usize, j: usize| (i % n) + n * (j % n);
    let mut vertices = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
            vertices.push([s * a + t * c, s * b + t * d, 0.0]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            if det > 0.0 {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            } else {
                triangles.push([v00, v01, v10]);
                triangles.push([v10, v01, v11]);
            }
        }
    }
    SurfaceMesh::from_parts(SurfaceKind::Torus { basis, n }, vertices, triangles)
}
