use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Full symmetric eigendecomposition; returns the `count` smallest pairs.
pub(super) fn smallest(a: &CsrMatrix, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.dim();
    let mut m = Mat::<f64>::zeros(n, n);
    for (i, j, v) in a.triplets() {
        m[(i, j)] = v;
    }
    let eig = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Solver {
        message: format!("dense eigendecomposition failed: {e:?}"),
        residuals: Vec::new(),
    })?;
    let s = eig.S();
    let u = eig.U();
    let theta = (0..count).map(|i| s[i]).collect();
    let vecs = (0..count)
        .map(|j| (0..n).map(|i| u[(i, j)]).collect())
        .collect();
    Ok((theta, vecs))
}
