//! Hersch balancing: a conformal dilation moving the center of mass of a
//! measure on the sphere to the origin.
//!
//! Dilations are parametrized by the open unit ball,
//! `phi_a(x) = ((1 - |a|^2) x + 2 (1 + a.x) a) / (1 + 2 a.x + |a|^2)`,
//! and the center-of-mass map `a -> sum_v w_v phi_a(x_v)` is driven to zero
//! by damped Newton with the analytic Jacobian.

use serde::{Deserialize, Serialize};

use super::MobiusMap;
use crate::error::{invalid, Error, Result};
use crate::geometry::SurfaceMesh;
use crate::linalg::{dot, norm};

const MAX_NEWTON: usize = 100;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BalanceResult {
    pub map: MobiusMap,
    /// Ball parameter of the dilation.
    pub center: [f64; 3],
    /// `max_i |int y^i o s dmu|` at the returned map.
    pub residual: f64,
    /// Center-of-mass norm of the input measure.
    pub initial_norm: f64,
    pub iterations: usize,
}

/// `phi_a(x)`.
pub fn ball_map(a: [f64; 3], x: [f64; 3]) -> [f64; 3] {
    let p = dot(a, x);
    let aa = dot(a, a);
    let d = 1.0 + 2.0 * p + aa;
    let c = 2.0 * (1.0 + p);
    [
        ((1.0 - aa) * x[0] + c * a[0]) / d,
        ((1.0 - aa) * x[1] + c * a[1]) / d,
        ((1.0 - aa) * x[2] + c * a[2]) / d,
    ]
}

/// `phi_a(x)` and its derivative with respect to `a`, `jac[k][j] = d phi_k / d a_j`.
pub fn ball_map_jacobian(a: [f64; 3], x: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let p = dot(a, x);
    let aa = dot(a, a);
    let d = 1.0 + 2.0 * p + aa;
    let num = [
        (1.0 - aa) * x[0] + 2.0 * (1.0 + p) * a[0],
        (1.0 - aa) * x[1] + 2.0 * (1.0 + p) * a[1],
        (1.0 - aa) * x[2] + 2.0 * (1.0 + p) * a[2],
    ];
    let dd = [2.0 * (x[0] + a[0]), 2.0 * (x[1] + a[1]), 2.0 * (x[2] + a[2])];
    let mut jac = [[0.0; 3]; 3];
    for k in 0..3 {
        for j in 0..3 {
            let dn = -2.0 * x[k] * a[j] + 2.0 * a[k] * x[j] + if k == j { 2.0 * (1.0 + p) } else { 0.0 };
            jac[k][j] = dn / d - num[k] * dd[j] / (d * d);
        }
    }
    ([num[0] / d, num[1] / d, num[2] / d], jac)
}

fn center_of_mass(points: &[[f64; 3]], weights: &[f64], a: [f64; 3]) -> [f64; 3] {
    let mut c = [0.0; 3];
    for (x, w) in points.iter().zip(weights) {
        let y = ball_map(a, *x);
        for k in 0..3 {
            c[k] += w * y[k];
        }
    }
    c
}

fn center_and_jacobian(points: &[[f64; 3]], weights: &[f64], a: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut c = [0.0; 3];
    let mut jac = [[0.0; 3]; 3];
    for (x, w) in points.iter().zip(weights) {
        let (y, j) = ball_map_jacobian(a, *x);
        for k in 0..3 {
            c[k] += w * y[k];
            for l in 0..3 {
                jac[k][l] += w * j[k][l];
            }
        }
    }
    (c, jac)
}

fn max_abs(v: [f64; 3]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Gaussian elimination with partial pivoting for `jac * x = rhs`.
fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Balances the discrete measure `sum_v weights[v] delta_{points[v]}` on the
/// unit sphere. Weights are normalized to unit total mass.
pub fn hersch_balance_points(
    points: &[[f64; 3]],
    weights: &[f64],
    tol: f64,
    delta: f64,
) -> Result<BalanceResult> {
    if points.len() != weights.len() || points.is_empty() {
        return Err(invalid("points and weights must be nonempty and of equal length"));
    }
    if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(invalid("balancing weights must be nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(invalid("balancing measure has zero mass"));
    }
    let w: Vec<f64> = weights.iter().map(|x| x / total).collect();

    let c0 = center_of_mass(points, &w, [0.0; 3]);
    let initial_norm = norm(c0);
    if initial_norm > 1.0 - delta {
        return Err(Error::BalanceInfeasible {
            norm: initial_norm,
            limit: 1.0 - delta,
        });
    }

    let mut a = [0.0; 3];
    let mut c = c0;
    let mut res = max_abs(c);
    for it in 0..=MAX_NEWTON {
        if res <= tol {
            return Ok(BalanceResult {
                map: MobiusMap::from_ball(a)?,
                center: a,
                residual: res,
                initial_norm,
                iterations: it,
            });
        }
        if it == MAX_NEWTON {
            break;
        }
        let jac;
        (c, jac) = center_and_jacobian(points, &w, a);
        let step = solve3(jac, [-c[0], -c[1], -c[2]]).ok_or_else(|| Error::Solver {
            message: "singular balancing Jacobian".into(),
            residuals: vec![res],
        })?;
        let current = norm(c);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = [a[0] + alpha * step[0], a[1] + alpha * step[1], a[2] + alpha * step[2]];
            if norm(trial) < 1.0 {
                let ct = center_of_mass(points, &w, trial);
                if norm(ct) < current {
                    a = trial;
                    c = ct;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        res = max_abs(c);
    }
    Err(Error::Solver {
        message: "Hersch balancing did not converge".into(),
        residuals: vec![res],
    })
}

/// Balances the measure `mu dVol` for a vertex density `mu` on a sphere
/// mesh.
pub fn hersch_balance(mesh: &SurfaceMesh, mu: &[f64], tol: f64) -> Result<BalanceResult> {
    if !mesh.is_sphere() {
        return Err(invalid("Hersch balancing needs a sphere mesh"));
    }
    if mu.len() != mesh.num_vertices() {
        return Err(invalid("density length does not match the mesh"));
    }
    let weights: Vec<f64> = mu.iter().zip(&mesh.vertex_area).map(|(d, m)| d * m).collect();
    hersch_balance_points(&mesh.unit_sphere_points(), &weights, tol, 1e-3)
}
