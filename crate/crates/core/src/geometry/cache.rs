//! Mesh cache files: a JSON document with a header and flat arrays. The
//! checksum is recomputed on load and must match the header.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SurfaceKind, SurfaceMesh};
use crate::error::{Error, Result};

const FORMAT: &str = "lambda1-mesh/1";

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    kind: SurfaceKind,
    scale: f64,
    checksum: String,
}

#[derive(Serialize, Deserialize)]
struct MeshFile {
    header: Header,
    vertices: Vec<f64>,
    triangles: Vec<usize>,
    areas: Vec<f64>,
}

pub fn write_mesh_cache(mesh: &SurfaceMesh, path: &Path) -> Result<()> {
    let file = MeshFile {
        header: Header {
            format: FORMAT.to_string(),
            kind: mesh.kind.clone(),
            scale: mesh.scale,
            checksum: mesh.checksum().to_string(),
        },
        vertices: mesh.vertices.iter().flatten().copied().collect(),
        triangles: mesh.triangles.iter().flatten().copied().collect(),
        areas: mesh.vertex_area.clone(),
    };
    let text = serde_json::to_string(&file).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn read_mesh_cache(path: &Path) -> Result<SurfaceMesh> {
    let text = fs::read_to_string(path)?;
    let file: MeshFile = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    if file.header.format != FORMAT {
        return Err(Error::Format(format!("unknown mesh format {}", file.header.format)));
    }
    if file.vertices.len() % 3 != 0 || file.triangles.len() % 3 != 0 {
        return Err(Error::Format("array lengths are not multiples of three".into()));
    }
    let nv = file.vertices.len() / 3;
    if file.areas.len() != nv || file.triangles.iter().any(|&v| v >= nv) {
        return Err(Error::Format("inconsistent array sizes".into()));
    }
    let genus = match file.header.kind {
        SurfaceKind::Sphere { .. } => 0,
        SurfaceKind::Torus { .. } => 1,
    };
    let mut mesh = SurfaceMesh {
        kind: file.header.kind,
        vertices: file.vertices.chunks(3).map(|c| [c[0], c[1], c[2]]).collect(),
        triangles: file.triangles.chunks(3).map(|c| [c[0], c[1], c[2]]).collect(),
        vertex_area: file.areas,
        genus,
        scale: file.header.scale,
        checksum: String::new(),
    };
    let found = mesh.compute_checksum();
    if found != file.header.checksum {
        return Err(Error::ChecksumMismatch {
            expected: file.header.checksum,
            found,
        });
    }
    mesh.checksum = found;
    Ok(mesh)
}
