//! Upper bound for `lambda_1(V)` on the sphere from balanced coordinate
//! test functions.

use serde::{Deserialize, Serialize};

use super::hersch::{hersch_balance, BalanceResult};
use crate::assembly::DiscreteOperators;
use crate::error::{invalid, Result};
use crate::geometry::SurfaceMesh;
use crate::potentials::Potential;
use crate::EIGHT_PI;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    /// `(S(f_i, f_i) + int V f_i^2) / int f_i^2` per coordinate.
    pub rayleigh: [f64; 3],
    /// `S(f_i, f_i) + int V f_i^2` per coordinate; their sum is the bound.
    pub numerators: [f64; 3],
    pub bound: f64,
    /// `sum_i int f_i^2`, which is one up to rounding.
    pub norm_sum: f64,
    /// Discrete Dirichlet energy of the balanced map minus its continuum
    /// value `8 pi`.
    pub energy_error: f64,
    /// `max_i |int f_i v|` against the ground state.
    pub orthogonality: f64,
    pub balance: BalanceResult,
}

/// Balances `v dVol` for the ground state `v` of `-Laplace + V` and evaluates
/// the three coordinate test functions `y^i o s`.
pub fn sphere_upper_bound(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    potential: &Potential,
    ground_state: &[f64],
) -> Result<BoundReport> {
    if !mesh.is_sphere() {
        return Err(invalid("the upper bound needs a sphere mesh"));
    }
    if mesh.checksum() != ops.mesh_checksum() || potential.mesh_checksum() != ops.mesh_checksum() {
        return Err(invalid("mesh, operators and potential do not match"));
    }
    ops.check_len(ground_state, "ground state")?;
    let peak = ground_state.iter().copied().fold(0.0, f64::max);
    if ground_state.iter().any(|x| *x < -1e-12 * peak) || peak <= 0.0 {
        return Err(invalid("ground state must be positive"));
    }
    let mass: f64 = ground_state.iter().zip(&ops.mass).map(|(x, m)| x * m).sum();
    let v: Vec<f64> = ground_state.iter().map(|x| x.max(0.0) / mass).collect();

    let balance = hersch_balance(mesh, &v, 1e-10)?;
    let image: Vec<[f64; 3]> = mesh
        .unit_sphere_points()
        .into_iter()
        .map(|x| balance.map.apply(x))
        .collect();

    let values = potential.values();
    let mut rayleigh = [0.0; 3];
    let mut numerators = [0.0; 3];
    let mut norm_sum = 0.0;
    let mut energy = 0.0;
    let mut orthogonality: f64 = 0.0;
    for i in 0..3 {
        let f: Vec<f64> = image.iter().map(|p| p[i]).collect();
        let dirichlet = ops.stiffness_form(&f, &f);
        let (mut pot, mut l2, mut ortho) = (0.0, 0.0, 0.0);
        for v_idx in 0..f.len() {
            let m = ops.mass[v_idx];
            pot += m * values[v_idx] * f[v_idx] * f[v_idx];
            l2 += m * f[v_idx] * f[v_idx];
            ortho += m * f[v_idx] * ground_state[v_idx];
        }
        numerators[i] = dirichlet + pot;
        rayleigh[i] = numerators[i] / l2;
        norm_sum += l2;
        energy += dirichlet;
        orthogonality = orthogonality.max(ortho.abs());
    }
    Ok(BoundReport {
        rayleigh,
        numerators,
        bound: numerators.iter().sum(),
        norm_sum,
        energy_error: energy - EIGHT_PI,
        orthogonality,
        balance,
    })
}
