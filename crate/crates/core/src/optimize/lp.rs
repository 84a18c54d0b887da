//! Mixed strategy for the row player minimizing `(C w)_i` against a
//! maximizing `w` on the simplex, by dense tableau simplex.

/// Weights `w` on the simplex maximizing `min_i (C w)_i` and the value.
/// `None` when the tableau fails to terminate or produces non-finite data.
pub(crate) fn maximin(c: &[Vec<f64>]) -> Option<(Vec<f64>, f64)> {
    let m = c.len();
    if m == 0 || c.iter().any(|r| r.len() != m || r.iter().any(|x| !x.is_finite())) {
        return None;
    }
    let lo = c.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let scale = c.iter().flatten().fold(0.0_f64, |s, x| s.max(x.abs())).max(1.0);
    let shift = scale - lo;
    // Covering LP min 1'y, C' y >= 1, y >= 0, with C' = C + shift > 0, solved
    // through its packing dual max 1'x, C'^T x <= 1; y are the slack prices.
    let cols = 2 * m;
    let mut t = vec![vec![0.0; cols + 1]; m + 1];
    for j in 0..m {
        for i in 0..m {
            t[j][i] = c[i][j] + shift;
        }
        t[j][m + j] = 1.0;
        t[j][cols] = 1.0;
    }
    for i in 0..m {
        t[m][i] = -1.0;
    }
    let mut basis: Vec<usize> = (m..cols).collect();
    let eps = 1e-12;
    for _ in 0..1000 {
        // Bland: smallest entering index, smallest leaving basis label.
        let Some(enter) = (0..cols).find(|&k| t[m][k] < -eps) else {
            let y: Vec<f64> = (0..m).map(|j| t[m][m + j].max(0.0)).collect();
            let total: f64 = y.iter().sum();
            if !(total > 0.0 && total.is_finite()) {
                return None;
            }
            let w: Vec<f64> = y.iter().map(|v| v / total).collect();
            let value = (0..m)
                .map(|i| (0..m).map(|j| c[i][j] * w[j]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            return Some((w, value));
        };
        let mut leave: Option<usize> = None;
        for r in 0..m {
            if t[r][enter] > eps {
                let ratio = t[r][cols] / t[r][enter];
                leave = match leave {
                    None => Some(r),
                    Some(l) => {
                        let best = t[l][cols] / t[l][enter];
                        if ratio < best - eps || (ratio <= best + eps && basis[r] < basis[l]) {
                            Some(r)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
        }
        // The packing polytope is bounded, so a leaving row always exists.
        let r = leave?;
        let p = t[r][enter];
        t[r].iter_mut().for_each(|x| *x /= p);
        let pivot = t[r].clone();
        for (k, row) in t.iter_mut().enumerate() {
            if k != r {
                let f = row[enter];
                if f != 0.0 {
                    row.iter_mut().zip(&pivot).for_each(|(x, y)| *x -= f * y);
                }
            }
        }
        basis[r] = enter;
    }
    None
}
