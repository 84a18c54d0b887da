//! Positive semidefinite `A` with `sum_ij A_ij u_i u_j = 1` on a cluster.
//!
//! Symmetric matrices are coordinatized isometrically for the Frobenius norm
//! (diagonal entries, off-diagonal entries times `sqrt 2`), which turns the
//! problem into a small convex quadratic over the PSD cone. Iterates
//! alternate a gradient step towards the affine least-squares set with the
//! projection onto the cone by eigenvalue clipping.

use serde::{Deserialize, Serialize};

use super::check_cluster;
use crate::assembly::{energy_density, DiscreteOperators};
use crate::eigen::Spectrum;
use crate::error::{invalid, Error, Result};
use crate::geometry::SurfaceMesh;
use crate::linalg::sym_eigen;
use crate::potentials::{project_zero_mean, Potential};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SosCertificate {
    /// Spectrum indices of the basis functions.
    pub basis: Vec<usize>,
    pub dimension: usize,
    /// Row-major `dimension x dimension`.
    pub gram: Vec<f64>,
    pub residual_inf: f64,
    pub residual_l2: f64,
    pub iterations: usize,
    pub converged: bool,
    pub mesh_checksum: String,
    #[serde(skip)]
    pub functions: Vec<Vec<f64>>,
}

impl SosCertificate {
    pub fn gram_entry(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.dimension + j]
    }

    /// `sum_ij A_ij u_i(v) u_j(v)` at every vertex.
    pub fn sum_of_squares(&self) -> Vec<f64> {
        let n = self.functions.first().map_or(0, Vec::len);
        let m = self.dimension;
        (0..n)
            .map(|v| {
                let mut s = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        s += self.gram_entry(i, j) * self.functions[i][v] * self.functions[j][v];
                    }
                }
                s
            })
            .collect()
    }

    /// `(residual_inf, residual_l2)` recomputed from the stored basis.
    pub fn recompute_residuals(&self, ops: &DiscreteOperators) -> (f64, f64) {
        residuals(ops, &self.sum_of_squares())
    }

    /// `u~_i = sqrt(c_i) sum_j w_ij u_j` for `A = sum_i c_i w_i w_i'`, so
    /// that `sum_i u~_i^2` is the certified sum of squares.
    pub fn factorized_functions(&self) -> Vec<Vec<f64>> {
        let m = self.dimension;
        let n = self.functions.first().map_or(0, Vec::len);
        let rows: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| self.gram_entry(i, j)).collect()).collect();
        let (vals, vecs) = sym_eigen(&rows);
        vals.iter()
            .zip(&vecs)
            .filter(|(c, _)| **c > 0.0)
            .map(|(c, w)| {
                let s = c.sqrt();
                (0..n)
                    .map(|v| s * (0..m).map(|j| w[j] * self.functions[j][v]).sum::<f64>())
                    .collect()
            })
            .collect()
    }

    pub fn min_gram_eigenvalue(&self) -> f64 {
        let rows: Vec<Vec<f64>> = (0..self.dimension)
            .map(|i| (0..self.dimension).map(|j| self.gram_entry(i, j)).collect())
            .collect();
        sym_eigen(&rows).0.first().copied().unwrap_or(0.0)
    }
}

fn residuals(ops: &DiscreteOperators, sos: &[f64]) -> (f64, f64) {
    let inf = sos.iter().fold(0.0_f64, |m, s| m.max((s - 1.0).abs()));
    let l2 = sos
        .iter()
        .zip(&ops.mass)
        .map(|(s, w)| w * (s - 1.0).powi(2))
        .sum::<f64>()
        .sqrt();
    (inf, l2)
}

fn pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect()
}

fn to_matrix(m: usize, x: &[f64]) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; m]; m];
    for (&(i, j), v) in pairs(m).iter().zip(x) {
        if i == j {
            a[i][i] = *v;
        } else {
            a[i][j] = v / std::f64::consts::SQRT_2;
            a[j][i] = a[i][j];
        }
    }
    a
}

fn from_matrix(a: &[Vec<f64>]) -> Vec<f64> {
    pairs(a.len())
        .iter()
        .map(|&(i, j)| if i == j { a[i][i] } else { a[i][j] * std::f64::consts::SQRT_2 })
        .collect()
}

fn project_psd(m: usize, x: &[f64]) -> Vec<f64> {
    let (vals, vecs) = sym_eigen(&to_matrix(m, x));
    let mut a = vec![vec![0.0; m]; m];
    for (lam, w) in vals.iter().zip(&vecs) {
        if *lam > 0.0 {
            for i in 0..m {
                for j in 0..m {
                    a[i][j] += lam * w[i] * w[j];
                }
            }
        }
    }
    from_matrix(&a)
}

/// Least-squares PSD certificate on `cluster`.
pub fn sos_certificate(
    ops: &DiscreteOperators,
    spectrum: &Spectrum,
    cluster: &[usize],
    tol: f64,
    maxiter: usize,
) -> Result<SosCertificate> {
    check_cluster(ops, spectrum, cluster)?;
    let m = cluster.len();
    let idx = pairs(m);
    let p = idx.len();
    let u: Vec<&Vec<f64>> = cluster.iter().map(|&i| &spectrum.eigenfunctions[i]).collect();

    // Normal equations G x = b of the mass-weighted residual.
    let mut g = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    let mut feat = vec![0.0; p];
    for (v, w) in ops.mass.iter().enumerate() {
        for (k, &(i, j)) in idx.iter().enumerate() {
            let f = u[i][v] * u[j][v];
            feat[k] = if i == j { f } else { std::f64::consts::SQRT_2 * f };
        }
        for k in 0..p {
            b[k] += w * feat[k];
            for l in 0..=k {
                g[k][l] += w * feat[k] * feat[l];
            }
        }
    }
    for k in 0..p {
        for l in 0..k {
            g[l][k] = g[k][l];
        }
    }

    let (gv, gw) = sym_eigen(&g);
    let lmax = gv.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    // Minimum-norm least-squares start.
    let mut x = vec![0.0; p];
    for (lam, w) in gv.iter().zip(&gw) {
        if *lam > 1e-12 * lmax {
            let c: f64 = w.iter().zip(&b).map(|(a, c)| a * c).sum::<f64>() / lam;
            x.iter_mut().zip(w).for_each(|(xi, wi)| *xi += c * wi);
        }
    }

    let mut y = project_psd(m, &x);
    let mut iterations = 0;
    let mut converged = y.iter().zip(&x).all(|(a, c)| (a - c).abs() <= tol * (1.0 + c.abs()));
    if !converged {
        // Accelerated projected gradient; objective x'Gx - 2 b'x.
        let step = 1.0 / (2.0 * lmax);
        let mut prev = y.clone();
        let mut z = y.clone();
        let mut t = 1.0_f64;
        while iterations < maxiter {
            iterations += 1;
            let grad: Vec<f64> = (0..p)
                .map(|k| 2.0 * (g[k].iter().zip(&z).map(|(a, c)| a * c).sum::<f64>() - b[k]))
                .collect();
            let trial: Vec<f64> = z.iter().zip(&grad).map(|(a, d)| a - step * d).collect();
            y = project_psd(m, &trial);
            let change = y
                .iter()
                .zip(&prev)
                .map(|(a, c)| (a - c).powi(2))
                .sum::<f64>()
                .sqrt();
            let scale = 1.0 + y.iter().map(|a| a * a).sum::<f64>().sqrt();
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            z = y
                .iter()
                .zip(&prev)
                .map(|(a, c)| a + (t - 1.0) / t_next * (a - c))
                .collect();
            t = t_next;
            prev.clone_from(&y);
            if change <= tol * scale {
                converged = true;
                break;
            }
        }
    }

    let a = to_matrix(m, &y);
    let mut cert = SosCertificate {
        basis: cluster.to_vec(),
        dimension: m,
        gram: a.iter().flatten().copied().collect(),
        residual_inf: 0.0,
        residual_l2: 0.0,
        iterations,
        converged,
        mesh_checksum: ops.mesh_checksum().to_string(),
        functions: u.into_iter().cloned().collect(),
    };
    (cert.residual_inf, cert.residual_l2) = cert.recompute_residuals(ops);
    Ok(cert)
}

/// Largest certificate residual accepted by [`recover_potential`].
pub const RECOVERY_LIMIT: f64 = 0.05;

/// `lambda_1 - sum_i |grad u~_i|^2` over the factorized certificate
/// functions.
pub fn recover_potential(
    ops: &DiscreteOperators,
    mesh: &SurfaceMesh,
    certificate: &SosCertificate,
    lambda1: f64,
) -> Result<Potential> {
    if certificate.residual_inf > RECOVERY_LIMIT {
        return Err(Error::CertificateUnusable {
            residual: certificate.residual_inf,
            limit: RECOVERY_LIMIT,
        });
    }
    if certificate.mesh_checksum != ops.mesh_checksum() || certificate.functions.len() != certificate.dimension {
        return Err(invalid("certificate does not belong to these operators"));
    }
    let funcs = certificate.factorized_functions();
    if funcs.is_empty() {
        return Err(Error::CertificateUnusable {
            residual: certificate.residual_inf,
            limit: RECOVERY_LIMIT,
        });
    }
    let density = energy_density(ops, mesh, &funcs)?;
    let f: Vec<f64> = density.iter().map(|e| lambda1 - e).collect();
    project_zero_mean(&f, ops)
}
