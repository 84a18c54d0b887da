//! First variation of `lambda_1`, sampled extremality tests, sum-of-squares
//! certificates, and bubble diagnostics.
//!
//! Along `V + t q` the `lambda_1` cluster splits into branches whose
//! derivatives at `t = 0` are the eigenvalues of `Q_ij = int q u_i u_j` on
//! the cluster basis. `V` is extremal exactly when `Q` is indefinite for
//! every zero-mean `q`.

mod bubble;
mod sos;

pub use bubble::{bubble_extract, bubble_from_functions, BubbleReport};
pub use sos::{recover_potential, sos_certificate, SosCertificate, RECOVERY_LIMIT};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::DiscreteOperators;
use crate::eigen::Spectrum;
use crate::error::{invalid, Result};
use crate::fields::smooth_random_field;
use crate::geometry::SurfaceMesh;
use crate::linalg::sym_eigen;
use crate::potentials::{project_zero_mean, Potential};

/// `Q_ij = int q u_i u_j` over the given eigenfunction indices.
pub fn variation_matrix(
    ops: &DiscreteOperators,
    spectrum: &Spectrum,
    cluster: &[usize],
    q: &Potential,
) -> Result<Vec<Vec<f64>>> {
    check_cluster(ops, spectrum, cluster)?;
    if q.mesh_checksum() != ops.mesh_checksum() {
        return Err(invalid("probe belongs to a different mesh"));
    }
    let mq: Vec<f64> = ops.mass.iter().zip(q.values()).map(|(m, x)| m * x).collect();
    let m = cluster.len();
    let mut out = vec![vec![0.0; m]; m];
    for a in 0..m {
        let ua = &spectrum.eigenfunctions[cluster[a]];
        for b in 0..=a {
            let ub = &spectrum.eigenfunctions[cluster[b]];
            let s: f64 = mq.iter().zip(ua).zip(ub).map(|((w, x), y)| w * x * y).sum();
            out[a][b] = s;
            out[b][a] = s;
        }
    }
    Ok(out)
}

fn check_cluster(ops: &DiscreteOperators, spectrum: &Spectrum, cluster: &[usize]) -> Result<()> {
    if cluster.is_empty() {
        return Err(invalid("cluster is empty"));
    }
    if spectrum.mesh_checksum != ops.mesh_checksum() {
        return Err(invalid("spectrum was computed on a different mesh"));
    }
    if let Some(i) = cluster.iter().find(|&&i| i >= spectrum.len()) {
        return Err(invalid(format!("cluster index {i} outside the spectrum")));
    }
    let mut sorted = cluster.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != cluster.len() {
        return Err(invalid("cluster indices repeat"));
    }
    Ok(())
}

/// Eigenvalues of the variation matrix, ascending. The first is the right
/// derivative of `lambda_1(V + t q)` at `t = 0`, the last the left one.
pub fn first_variation(
    ops: &DiscreteOperators,
    spectrum: &Spectrum,
    cluster: &[usize],
    q: &Potential,
) -> Result<Vec<f64>> {
    Ok(sym_eigen(&variation_matrix(ops, spectrum, cluster, q)?).0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtremalConfig {
    /// Number of random smooth probes.
    pub probes: usize,
    /// Highest harmonic degree (sphere) or frequency radius (torus).
    pub degree: usize,
    pub seed: u64,
    /// Sign tolerance; `None` means `1e-6 * max(1, lambda_1)`.
    pub tol: Option<f64>,
    /// Also test `project_zero_mean(u_i^2)` for every cluster member.
    pub informed_probes: bool,
}

impl Default for ExtremalConfig {
    fn default() -> Self {
        ExtremalConfig {
            probes: 64,
            degree: 8,
            seed: 0,
            tol: None,
            informed_probes: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    /// Probe position: random probes first, then informed ones.
    pub index: usize,
    pub informed: bool,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub index: usize,
    pub min: f64,
    pub max: f64,
    /// Probe values per vertex.
    pub values: Vec<f64>,
}

impl Witness {
    /// A direction along which `lambda_1` increases to first order.
    pub fn ascent(&self, ops: &DiscreteOperators) -> Result<Potential> {
        let sign = if self.min > 0.0 { 1.0 } else { -1.0 };
        let f: Vec<f64> = self.values.iter().map(|x| sign * x).collect();
        project_zero_mean(&f, ops)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    ExtremalConsistent,
    NotExtremal { witness: Witness },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Verdict::ExtremalConsistent)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::ExtremalConsistent => "extremal_consistent",
            Verdict::NotExtremal { .. } => "not_extremal",
            Verdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtremalityReport {
    pub probe_count: usize,
    pub probes: Vec<ProbeOutcome>,
    pub verdict: Verdict,
    pub sos: Option<SosCertificate>,
    pub seed: u64,
    pub tol: f64,
    pub lambda1: f64,
    pub cluster: Vec<usize>,
}

impl ExtremalityReport {
    /// Largest one-sided violation `max(min, -max)` over the probes; positive
    /// values witness non-extremality.
    pub fn worst_violation(&self) -> f64 {
        self.probes
            .iter()
            .map(|p| p.min.max(-p.max))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Zero-mean probe of unit sup norm from a seeded smooth field.
pub fn smooth_probe(mesh: &SurfaceMesh, ops: &DiscreteOperators, degree: usize, seed: u64) -> Result<Potential> {
    let f = smooth_random_field(mesh, degree, seed);
    unit_probe(&f, ops)
}

fn unit_probe(f: &[f64], ops: &DiscreteOperators) -> Result<Potential> {
    let p = project_zero_mean(f, ops)?;
    let s = p.sup_norm();
    if s == 0.0 {
        return Ok(p);
    }
    p.scaled(1.0 / s, ops)
}

fn probe_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(index as u64 + 1)
}

/// Tests the sign structure of the first variation over seeded smooth
/// probes. Probes are generated up front and evaluated in parallel; the
/// report does not depend on the number of worker threads.
pub fn indefiniteness_test(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    spectrum: &Spectrum,
    config: &ExtremalConfig,
) -> Result<ExtremalityReport> {
    let cluster = spectrum.lambda1_cluster().to_vec();
    check_cluster(ops, spectrum, &cluster)?;
    let lambda1 = spectrum.lambda1();
    let tol = config.tol.unwrap_or(1e-6 * lambda1.abs().max(1.0));

    let mut probes: Vec<(bool, Potential)> = (0..config.probes)
        .into_par_iter()
        .map(|i| smooth_probe(mesh, ops, config.degree, probe_seed(config.seed, i)).map(|p| (false, p)))
        .collect::<Result<_>>()?;
    if config.informed_probes {
        for &i in &cluster {
            let sq: Vec<f64> = spectrum.eigenfunctions[i].iter().map(|x| x * x).collect();
            probes.push((true, unit_probe(&sq, ops)?));
        }
    }

    let outcomes: Vec<ProbeOutcome> = probes
        .par_iter()
        .enumerate()
        .map(|(index, (informed, q))| {
            let d = first_variation(ops, spectrum, &cluster, q)?;
            Ok(ProbeOutcome {
                index,
                informed: *informed,
                min: d[0],
                max: d[d.len() - 1],
            })
        })
        .collect::<Result<_>>()?;

    let verdict = if !spectrum.lambda1_cluster_complete() {
        Verdict::Inconclusive {
            reason: "lambda_1 cluster reaches the last computed eigenpair".into(),
        }
    } else if let Some(o) = outcomes.iter().find(|o| o.min > tol || o.max < -tol) {
        Verdict::NotExtremal {
            witness: Witness {
                index: o.index,
                min: o.min,
                max: o.max,
                values: probes[o.index].1.values().to_vec(),
            },
        }
    } else {
        Verdict::ExtremalConsistent
    };

    Ok(ExtremalityReport {
        probe_count: outcomes.len(),
        probes: outcomes,
        verdict,
        sos: None,
        seed: config.seed,
        tol,
        lambda1,
        cluster,
    })
}

#[cfg(test)]
mod tests;
