//! Small fixed-size vector helpers.

#[inline]
pub fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn scaled(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Mass-weighted inner product `sum_i m_i a_i b_i`.
pub fn mass_dot(mass: &[f64], a: &[f64], b: &[f64]) -> f64 {
    mass.iter().zip(a).zip(b).map(|((m, x), y)| m * x * y).sum()
}

/// Eigenvalues (ascending) and eigenvectors (as columns `vecs[k]`) of a small
/// symmetric matrix given by rows; only the lower triangle is read.
pub fn sym_eigen(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = rows.len();
    if m == 0 {
        return (Vec::new(), Vec::new());
    }
    let a = faer::Mat::<f64>::from_fn(m, m, |i, j| if i >= j { rows[i][j] } else { rows[j][i] });
    let eig = a
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("symmetric eigendecomposition of a finite matrix");
    let vals = (0..m).map(|k| eig.S()[k]).collect();
    let vecs = (0..m).map(|k| (0..m).map(|i| eig.U()[(i, k)]).collect()).collect();
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_symmetric_eigenproblem() {
        let (vals, vecs) = sym_eigen(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        assert!((vecs[0][0] + vecs[0][1]).abs() < 1e-14);
        assert!(sym_eigen(&[]).0.is_empty());
    }
}
