//! Cotangent stiffness, lumped mass, and gradient energy densities.

use crate::error::{invalid, Result};
use crate::geometry::SurfaceMesh;
use crate::linalg::{cross, dot, norm, sub};
use crate::sparse::CsrMatrix;

/// Discrete Dirichlet form and lumped mass of a unit-area mesh.
///
/// `cot_weights[t][k]` is half the cotangent of the angle at corner `k` of
/// triangle `t`; it weights the edge opposite that corner.
#[derive(Clone, Debug)]
pub struct DiscreteOperators {
    pub stiffness: CsrMatrix,
    pub mass: Vec<f64>,
    pub(crate) triangles: Vec<[usize; 3]>,
    pub(crate) cot_weights: Vec<[f64; 3]>,
    mesh_checksum: String,
}

impl DiscreteOperators {
    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    pub fn mesh_checksum(&self) -> &str {
        &self.mesh_checksum
    }

    /// `S(u, v)`.
    pub fn stiffness_form(&self, u: &[f64], v: &[f64]) -> f64 {
        self.stiffness.bilinear(u, v)
    }

    /// Dirichlet energy `S(u, u)` summed triangle by triangle.
    pub fn dirichlet_energy(&self, u: &[f64]) -> f64 {
        self.triangle_energies(u).iter().sum()
    }

    fn triangle_energies(&self, u: &[f64]) -> Vec<f64> {
        self.triangles
            .iter()
            .zip(&self.cot_weights)
            .map(|(&[a, b, c], w)| {
                w[0] * (u[b] - u[c]).powi(2) + w[1] * (u[c] - u[a]).powi(2) + w[2] * (u[a] - u[b]).powi(2)
            })
            .collect()
    }

    pub(crate) fn check_len(&self, f: &[f64], what: &str) -> Result<()> {
        if f.len() != self.dim() {
            return Err(invalid(format!(
                "{what} has {} entries, expected {}",
                f.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Assembles the cotangent stiffness form and lumped mass of `mesh`.
pub fn assemble(mesh: &SurfaceMesh) -> Result<DiscreteOperators> {
    if !mesh.is_consistently_oriented() {
        return Err(invalid("mesh is not a consistently oriented closed manifold"));
    }
    let n = mesh.num_vertices();
    let mut triplets = Vec::with_capacity(12 * mesh.num_triangles());
    let mut cot_weights = Vec::with_capacity(mesh.num_triangles());
    for (t, &tri) in mesh.triangles.iter().enumerate() {
        let p = mesh.triangle_corners(t);
        let mut w = [0.0; 3];
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let a = sub(p[i], p[k]);
            let b = sub(p[j], p[k]);
            w[k] = 0.5 * dot(a, b) / norm(cross(a, b));
            let (vi, vj) = (tri[i], tri[j]);
            triplets.push((vi, vi, w[k]));
            triplets.push((vj, vj, w[k]));
            triplets.push((vi, vj, -w[k]));
            triplets.push((vj, vi, -w[k]));
        }
        cot_weights.push(w);
    }
    Ok(DiscreteOperators {
        stiffness: CsrMatrix::from_triplets(n, triplets),
        mass: mesh.vertex_area.clone(),
        triangles: mesh.triangles.clone(),
        cot_weights,
        mesh_checksum: mesh.checksum().to_string(),
    })
}

/// Lumped quadrature `sum_i m_i f_i`.
pub fn integrate(ops: &DiscreteOperators, f: &[f64]) -> Result<f64> {
    ops.check_len(f, "integrand")?;
    Ok(ops.mass.iter().zip(f).map(|(m, x)| m * x).sum())
}

/// Per-vertex density of `sum_i |grad u_i|^2`: constant triangle gradients
/// averaged to vertices with weights one third of the triangle areas, so
/// that its integral is exactly the summed stiffness energy.
pub fn energy_density(
    ops: &DiscreteOperators,
    mesh: &SurfaceMesh,
    functions: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if functions.is_empty() {
        return Err(invalid("energy density needs at least one function"));
    }
    if mesh.checksum() != ops.mesh_checksum() {
        return Err(invalid("operators were assembled on a different mesh"));
    }
    let mut acc = vec![0.0; ops.dim()];
    let mut tri_energy = vec![0.0; ops.triangles.len()];
    for u in functions {
        ops.check_len(u, "function")?;
        for (e, x) in tri_energy.iter_mut().zip(ops.triangle_energies(u)) {
            *e += x;
        }
    }
    for (tri, e) in ops.triangles.iter().zip(&tri_energy) {
        for &v in tri {
            acc[v] += e / 3.0;
        }
    }
    Ok(acc.iter().zip(&ops.mass).map(|(a, m)| a / m).collect())
}
