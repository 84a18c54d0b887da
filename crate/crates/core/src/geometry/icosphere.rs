use std::collections::HashMap;

use super::{unit_area_radius, SurfaceKind, SurfaceMesh};
use crate::error::{Error, Result};
use crate::linalg::{norm, scaled};

/// Level 8 already has 655 362 vertices.
pub const MAX_ICOSPHERE_LEVEL: u32 = 8;

/// Icosahedron subdivided `level` times by 4-to-1 midpoint splitting, with
/// every vertex projected onto the sphere of area one.
pub fn build_icosphere(level: u32) -> Result<SurfaceMesh> {
    if level > MAX_ICOSPHERE_LEVEL {
        return Err(Error::Resource(format!(
            "icosphere level {level} exceeds the limit {MAX_ICOSPHERE_LEVEL}"
        )));
    }
    let r = unit_area_radius();
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let base = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let project = |p: [f64; 3]| scaled(p, r / norm(p));
    let mut vertices: Vec<[f64; 3]> = base.iter().map(|&p| project(p)).collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut refined = Vec::with_capacity(4 * triangles.len());
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push(project([
                    0.5 * (p[0] + q[0]),
                    0.5 * (p[1] + q[1]),
                    0.5 * (p[2] + q[2]),
                ]));
                vertices.len() - 1
            })
        };
        for &[a, b, c] in &triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            refined.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = refined;
    }

    SurfaceMesh::from_parts(SurfaceKind::Sphere { level }, vertices, triangles)
}
