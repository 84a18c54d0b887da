//! Shift-inverted block subspace iteration with Rayleigh-Ritz extraction.
//!
//! The shift starts at `min(0, min V) - 1`, where `A - sigma I` is positive
//! definite by construction. Once the lowest Ritz pair has settled the shift
//! is moved up towards `lambda_0`; every candidate shift is accepted only if
//! the sparse Cholesky factorization succeeds, which certifies that it
//! still lies below the spectrum.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::block_apply;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

struct ShiftedFactor {
    symbolic: SymbolicLlt<usize>,
    llt: Llt<usize, f64>,
}

fn shifted_matrix(a: &CsrMatrix, sigma: f64) -> SparseColMat<usize, f64> {
    let trip: Vec<Triplet<usize, usize, f64>> = a
        .triplets()
        .filter(|&(i, j, _)| i >= j)
        .map(|(i, j, v)| Triplet::new(i, j, if i == j { v - sigma } else { v }))
        .collect();
    SparseColMat::try_new_from_triplets(a.dim(), a.dim(), &trip)
        .expect("operator triplets are in range")
}

impl ShiftedFactor {
    fn new(a: &CsrMatrix, sigma: f64) -> Result<Self> {
        let mat = shifted_matrix(a, sigma);
        let symbolic = SymbolicLlt::try_new(mat.symbolic(), Side::Lower).map_err(|e| Error::Solver {
            message: format!("symbolic factorization failed: {e:?}"),
            residuals: Vec::new(),
        })?;
        let llt = Llt::try_new_with_symbolic(symbolic.clone(), mat.as_ref(), Side::Lower)
            .map_err(|e| Error::Solver {
                message: format!("shift {sigma} is not below the spectrum: {e:?}"),
                residuals: Vec::new(),
            })?;
        Ok(ShiftedFactor { symbolic, llt })
    }

    /// Refactors at a new shift; `None` if `A - sigma I` is not definite.
    fn refactor(&self, a: &CsrMatrix, sigma: f64) -> Option<Llt<usize, f64>> {
        let mat = shifted_matrix(a, sigma);
        Llt::try_new_with_symbolic(self.symbolic.clone(), mat.as_ref(), Side::Lower).ok()
    }
}

fn orthonormalize(y: &Mat<f64>) -> Mat<f64> {
    y.qr().compute_thin_Q()
}

pub(super) fn smallest(
    a: &CsrMatrix,
    count: usize,
    sigma0: f64,
    tol: f64,
    budget: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.dim();
    let p = (2 * count).max(count + 8).min(n);
    let mut factor = ShiftedFactor::new(a, sigma0)?;
    let mut sigma = sigma0;
    let mut reshifts = 0;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Mat::<f64>::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
    x = orthonormalize(&x);

    let mut best = vec![f64::INFINITY; count];
    for iter in 0..budget.max(1) {
        let mut y = x.clone();
        factor.llt.solve_in_place(y.as_mut());
        let y = orthonormalize(&y);
        let ay = block_apply(a, &y);
        let mut h = y.transpose() * &ay;
        for i in 0..p {
            for j in 0..i {
                let s = 0.5 * (h[(i, j)] + h[(j, i)]);
                h[(i, j)] = s;
                h[(j, i)] = s;
            }
        }
        let eig = h.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Solver {
            message: format!("Rayleigh-Ritz step failed: {e:?}"),
            residuals: best.clone(),
        })?;
        let theta: Vec<f64> = (0..p).map(|i| eig.S()[i]).collect();
        let z = eig.U().to_owned();
        x = &y * &z;
        let ax = &ay * &z;

        let res: Vec<f64> = (0..count)
            .map(|j| {
                (0..n)
                    .map(|i| (ax[(i, j)] - theta[j] * x[(i, j)]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        best = res.clone();
        let converged = res
            .iter()
            .zip(&theta)
            .all(|(r, t)| *r <= tol * t.abs().max(1.0));
        if converged {
            let vecs = (0..count)
                .map(|j| (0..n).map(|i| x[(i, j)]).collect())
                .collect();
            return Ok((theta[..count].to_vec(), vecs));
        }

        let spread = (theta[count - 1] - theta[0]).max(1.0);
        if reshifts < 3 && iter >= 2 && res[0] <= 1e-2 * spread {
            let mut target = theta[0] - res[0] - 0.05 * spread;
            if target - sigma > 0.1 * (theta[count - 1] - sigma) {
                for _ in 0..4 {
                    if let Some(llt) = factor.refactor(a, target) {
                        factor.llt = llt;
                        sigma = target;
                        break;
                    }
                    target = 0.5 * (target + sigma);
                }
                reshifts += 1;
            }
        }
    }
    Err(Error::Solver {
        message: format!("subspace iteration did not converge in {budget} iterations"),
        residuals: best,
    })
}
