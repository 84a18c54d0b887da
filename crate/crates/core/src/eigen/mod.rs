//! Smallest eigenpairs of the generalized problem `(S + M diag(V)) u = lambda M u`.
//!
//! With the lumped mass `M = D^2` the pencil is equivalent to the standard
//! symmetric problem for `A = D^-1 S D^-1 + diag(V)` acting on `w = D u`,
//! which is what both solver paths work with. Small problems use a dense
//! symmetric eigendecomposition; larger ones use shift-inverted subspace
//! iteration with a sparse Cholesky factorization of `A - sigma I`.

mod dense;
mod export;
mod subspace;

pub use export::{read_eigenfunctions, write_eigenfunctions};

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assembly::DiscreteOperators;
use crate::error::{invalid, Result};
use crate::potentials::Potential;
use crate::sparse::CsrMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenConfig {
    /// Highest eigenvalue index computed; `k + 1` pairs are returned.
    pub k: usize,
    /// Residual tolerance, relative to `max(1, |lambda|)`.
    pub tol: f64,
    /// Relative gap below which neighbouring eigenvalues share a cluster.
    pub cluster_tol: f64,
    /// Largest vertex count solved densely.
    pub dense_max: usize,
    pub seed: u64,
    /// Iteration budget; `None` means `10 k sqrt(N)`.
    pub max_iter: Option<usize>,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            k: 8,
            tol: 1e-8,
            cluster_tol: 1e-2,
            dense_max: 400,
            seed: 0,
            max_iter: None,
        }
    }
}

/// Ascending eigenvalues with mass-orthonormal eigenfunctions.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Vec<f64>>,
    pub clusters: Vec<Vec<usize>>,
    /// `|| A w - lambda w ||` for each pair.
    pub residuals: Vec<f64>,
    pub potential_checksum: String,
    pub mesh_checksum: String,
    pub cluster_tol: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn lambda0(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn ground_state(&self) -> &[f64] {
        &self.eigenfunctions[0]
    }

    pub fn cluster_containing(&self, index: usize) -> &[usize] {
        self.clusters
            .iter()
            .find(|c| c.contains(&index))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Indices of the cluster containing `lambda_1`.
    pub fn lambda1_cluster(&self) -> &[usize] {
        self.cluster_containing(1)
    }

    /// False when the `lambda_1` cluster reaches the last computed pair and
    /// may therefore be truncated.
    pub fn lambda1_cluster_complete(&self) -> bool {
        self.lambda1_cluster()
            .last()
            .is_some_and(|&i| i + 1 < self.len())
    }

    /// One row per pair: index, eigenvalue, residual, cluster id.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue,residual,cluster\n");
        for (i, (lam, res)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            let cid = self.clusters.iter().position(|c| c.contains(&i)).unwrap_or(0);
            out.push_str(&format!("{i},{},{},{cid}\n", fmt17(*lam), fmt17(*res)));
        }
        out
    }
}

/// Seventeen significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn values_checksum(values: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Solves for the `k + 1` smallest eigenpairs of `-Laplace + V`; `None`
/// means the zero potential.
pub fn solve_spectrum(
    ops: &DiscreteOperators,
    potential: Option<&Potential>,
    config: &EigenConfig,
) -> Result<Spectrum> {
    match potential {
        Some(p) => {
            if p.mesh_checksum() != ops.mesh_checksum() {
                return Err(invalid("potential belongs to a different mesh"));
            }
            solve_with_values(ops, p.values(), config)
        }
        None => solve_with_values(ops, &vec![0.0; ops.dim()], config),
    }
}

/// Same as [`solve_spectrum`] with raw vertex values, which need not have
/// zero mean.
pub fn solve_with_values(
    ops: &DiscreteOperators,
    values: &[f64],
    config: &EigenConfig,
) -> Result<Spectrum> {
    ops.check_len(values, "potential")?;
    if config.k < 2 {
        return Err(invalid("k must be at least 2"));
    }
    if config.tol <= 0.0 || !config.tol.is_finite() {
        return Err(invalid("tolerance must be positive"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("potential has non-finite values"));
    }
    let n = ops.dim();
    let count = config.k + 1;
    if count > n {
        return Err(invalid(format!("requested {count} pairs from {n} vertices")));
    }
    let sqrt_mass: Vec<f64> = ops.mass.iter().map(|m| m.sqrt()).collect();
    let a = scaled_operator(&ops.stiffness, &sqrt_mass, values);

    let (theta, w) = if n <= config.dense_max {
        dense::smallest(&a, count)?
    } else {
        let min_v = values.iter().copied().fold(f64::INFINITY, f64::min);
        let sigma = min_v.min(0.0) - 1.0;
        let budget = config
            .max_iter
            .unwrap_or_else(|| (10.0 * config.k as f64 * (n as f64).sqrt()).ceil() as usize);
        subspace::smallest(&a, count, sigma, config.tol, budget, config.seed)?
    };

    Ok(finish(ops, &a, &sqrt_mass, values, theta, w, config))
}

/// `D^-1 S D^-1 + diag(V)`.
fn scaled_operator(stiffness: &CsrMatrix, sqrt_mass: &[f64], values: &[f64]) -> CsrMatrix {
    let n = stiffness.dim();
    let mut trip: Vec<(usize, usize, f64)> = stiffness
        .triplets()
        .map(|(i, j, s)| (i, j, s / (sqrt_mass[i] * sqrt_mass[j])))
        .collect();
    trip.extend((0..n).map(|i| (i, i, values[i])));
    CsrMatrix::from_triplets(n, trip)
}

pub(crate) fn block_apply(a: &CsrMatrix, x: &Mat<f64>) -> Mat<f64> {
    let (n, p) = (x.nrows(), x.ncols());
    let mut y = Mat::<f64>::zeros(n, p);
    let mut col = vec![0.0; n];
    let mut out = vec![0.0; n];
    for j in 0..p {
        for i in 0..n {
            col[i] = x[(i, j)];
        }
        a.matvec(&col, &mut out);
        for i in 0..n {
            y[(i, j)] = out[i];
        }
    }
    y
}

fn residual(a: &CsrMatrix, w: &[f64], theta: f64) -> f64 {
    let aw = a.apply(w);
    aw.iter()
        .zip(w)
        .map(|(x, y)| (x - theta * y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Clusters, deterministic bases for numerically degenerate clusters, sign
/// normalization, and the change back to mass-orthonormal vertex functions.
fn finish(
    ops: &DiscreteOperators,
    a: &CsrMatrix,
    sqrt_mass: &[f64],
    values: &[f64],
    mut theta: Vec<f64>,
    mut w: Vec<Vec<f64>>,
    config: &EigenConfig,
) -> Spectrum {
    let n = ops.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_ba5e);
    let reference: Vec<Vec<f64>> = (0..theta.len())
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();

    // Rotate exactly degenerate groups onto the projected reference vectors.
    let mut start = 0;
    while start < theta.len() {
        let mut end = start + 1;
        while end < theta.len()
            && theta[end] - theta[start] <= config.tol * theta[start].abs().max(1.0)
        {
            end += 1;
        }
        if end - start > 1 {
            let group: Vec<Vec<f64>> = w[start..end].to_vec();
            let mut basis: Vec<Vec<f64>> = Vec::new();
            for r in &reference[start..end] {
                let mut v = vec![0.0; n];
                for g in &group {
                    let c = dot(g, r);
                    v.iter_mut().zip(g).for_each(|(x, y)| *x += c * y);
                }
                for _ in 0..2 {
                    for b in &basis {
                        let c = dot(b, &v);
                        v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                    }
                }
                let nv = dot(&v, &v).sqrt();
                v.iter_mut().for_each(|x| *x /= nv);
                basis.push(v);
            }
            for (off, v) in basis.into_iter().enumerate() {
                let av = a.apply(&v);
                theta[start + off] = dot(&v, &av);
                w[start + off] = v;
            }
        }
        start = end;
    }

    let mut order: Vec<usize> = (0..theta.len()).collect();
    order.sort_by(|&i, &j| theta[i].total_cmp(&theta[j]));
    let theta: Vec<f64> = order.iter().map(|&i| theta[i]).collect();
    let w: Vec<Vec<f64>> = order.iter().map(|&i| w[i].clone()).collect();

    let residuals: Vec<f64> = theta.iter().zip(&w).map(|(t, v)| residual(a, v, *t)).collect();
    let mut eigenfunctions: Vec<Vec<f64>> = w
        .iter()
        .map(|v| v.iter().zip(sqrt_mass).map(|(x, d)| x / d).collect())
        .collect();
    for (idx, u) in eigenfunctions.iter_mut().enumerate() {
        let sign = if idx == 0 {
            dot(u, &ops.mass)
        } else {
            u.iter().zip(&reference[idx]).zip(&ops.mass).map(|((x, r), m)| x * r * m).sum()
        };
        if sign < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
        }
    }

    Spectrum {
        clusters: cluster(&theta, config.cluster_tol),
        eigenvalues: theta,
        eigenfunctions,
        residuals,
        potential_checksum: values_checksum(values),
        mesh_checksum: ops.mesh_checksum().to_string(),
        cluster_tol: config.cluster_tol,
    }
}

/// Re-solves with a larger `k` until the `lambda_1` cluster is complete.
pub fn solve_spectrum_complete(
    ops: &DiscreteOperators,
    potential: Option<&Potential>,
    config: &EigenConfig,
) -> Result<Spectrum> {
    let mut cfg = config.clone();
    loop {
        let spec = solve_spectrum(ops, potential, &cfg)?;
        if spec.lambda1_cluster_complete() || cfg.k + 1 >= ops.dim() || cfg.k >= 64 {
            return Ok(spec);
        }
        cfg.k = (2 * cfg.k).min(ops.dim() - 1);
    }
}

/// `(S(u,u) + int V u^2) / int u^2`.
pub fn rayleigh_quotient(ops: &DiscreteOperators, potential: &[f64], u: &[f64]) -> Result<f64> {
    ops.check_len(potential, "potential")?;
    ops.check_len(u, "function")?;
    let denom: f64 = ops.mass.iter().zip(u).map(|(m, x)| m * x * x).sum();
    if denom <= 0.0 || !denom.is_finite() {
        return Err(invalid("function has zero mass norm"));
    }
    let pot: f64 = ops
        .mass
        .iter()
        .zip(u)
        .zip(potential)
        .map(|((m, x), v)| m * v * x * x)
        .sum();
    Ok((ops.stiffness_form(u, u) + pot) / denom)
}

/// Greedy grouping of ascending values: `lambda_i` joins the cluster of
/// `lambda_{i-1}` when the gap is at most `tau * max(1, |lambda_i|)`.
pub fn cluster(eigenvalues: &[f64], tau: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &lam) in eigenvalues.iter().enumerate() {
        match out.last_mut() {
            Some(c) if lam - eigenvalues[i - 1] <= tau * lam.abs().max(1.0) => c.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}
