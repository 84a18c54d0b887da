//! Ascent of `lambda_1` over zero-mean potentials.
//!
//! Each iteration tests extremality; if a probe is definite, the potential
//! moves along either the best mixture of squared cluster eigenfunctions or
//! the witness probe, whichever has the larger predicted slope, with Armijo
//! backtracking. Spectra are re-solved at every accepted iterate, so
//! derivatives are always taken against the current cluster basis.

mod lp;

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assembly::DiscreteOperators;
use crate::eigen::{fmt17, solve_spectrum_complete, EigenConfig, Spectrum};
use crate::error::{invalid, Error, Result};
use crate::extremal::{first_variation, indefiniteness_test, ExtremalConfig, Verdict};
use crate::geometry::SurfaceMesh;
use crate::potentials::{project_zero_mean, Potential};
use crate::EIGHT_PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AscentConfig {
    pub seed: u64,
    /// Sup-norm bound `B` on every iterate.
    pub box_bound: f64,
    pub max_iter: usize,
    pub step0: f64,
    pub cluster_tol: f64,
    /// Probe sign tolerance; `None` means `1e-6 * max(1, lambda_1)`.
    pub stop_tol: Option<f64>,
    pub armijo: f64,
    pub max_halvings: usize,
    pub probes: usize,
    pub probe_degree: usize,
    /// Eigenpairs requested beyond `lambda_0`.
    pub k: usize,
    pub eigen_tol: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            seed: 0,
            box_bound: 20.0 * EIGHT_PI,
            max_iter: 200,
            step0: 1.0,
            cluster_tol: 1e-2,
            stop_tol: None,
            armijo: 1e-4,
            max_halvings: 30,
            probes: 64,
            probe_degree: 8,
            k: 8,
            eigen_tol: 1e-8,
        }
    }
}

impl AscentConfig {
    fn eigen(&self) -> EigenConfig {
        EigenConfig {
            k: self.k,
            tol: self.eigen_tol,
            cluster_tol: self.cluster_tol,
            seed: self.seed,
            ..EigenConfig::default()
        }
    }

    fn extremal(&self) -> ExtremalConfig {
        ExtremalConfig {
            probes: self.probes,
            degree: self.probe_degree,
            seed: self.seed,
            tol: self.stop_tol,
            informed_probes: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AscentDirection {
    /// Zero mean, unit sup norm; zero when no mixture moves the cluster.
    pub q: Potential,
    pub weights: Vec<f64>,
    /// Smallest eigenvalue of the variation matrix along `q`.
    pub slope: f64,
    /// True when the linear program failed and uniform weights were used.
    pub fallback: bool,
}

fn unit_sup(p: Potential, ops: &DiscreteOperators) -> Result<Potential> {
    let s = p.sup_norm();
    if s <= 1e-14 {
        return Ok(Potential::zero(ops));
    }
    p.scaled(1.0 / s, ops)
}

/// `project_zero_mean(sum_j w_j u_j^2)` with `w` maximizing the smallest
/// diagonal derivative `int u_i^2 (u_j^2 - mean u_j^2)` over the simplex.
pub fn ascent_direction(
    ops: &DiscreteOperators,
    spectrum: &Spectrum,
    cluster: &[usize],
) -> Result<AscentDirection> {
    if cluster.is_empty() || cluster.iter().any(|&i| i >= spectrum.len()) {
        return Err(invalid("cluster indices outside the spectrum"));
    }
    let area: f64 = ops.mass.iter().sum();
    let sq: Vec<Vec<f64>> = cluster
        .iter()
        .map(|&i| spectrum.eigenfunctions[i].iter().map(|x| x * x).collect())
        .collect();
    let means: Vec<f64> = sq
        .iter()
        .map(|s| ops.mass.iter().zip(s).map(|(m, x)| m * x).sum::<f64>() / area)
        .collect();
    let m = cluster.len();
    let mut c = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            c[i][j] = ops
                .mass
                .iter()
                .zip(&sq[i])
                .zip(&sq[j])
                .map(|((w, a), b)| w * a * b)
                .sum::<f64>()
                - means[i] * means[j] * area;
        }
    }
    let (weights, fallback) = match lp::maximin(&c) {
        Some((w, _)) => (w, false),
        None => (vec![1.0 / m as f64; m], true),
    };
    let mut f = vec![0.0; ops.dim()];
    for (w, s) in weights.iter().zip(&sq) {
        f.iter_mut().zip(s).for_each(|(x, y)| *x += w * y);
    }
    let q = unit_sup(project_zero_mean(&f, ops)?, ops)?;
    let slope = first_variation(ops, spectrum, cluster, &q)?[0];
    Ok(AscentDirection {
        q,
        weights,
        slope,
        fallback,
    })
}

/// Clips to `[-b, b]` and re-projects until both hold within `1e-10`.
pub fn project_box(f: &[f64], ops: &DiscreteOperators, b: f64) -> Result<Potential> {
    let mut p = project_zero_mean(f, ops)?;
    for _ in 0..200 {
        if p.sup_norm() <= b + 1e-10 {
            return Ok(p);
        }
        let clipped: Vec<f64> = p.values().iter().map(|x| x.clamp(-b, b)).collect();
        p = project_zero_mean(&clipped, ops)?;
    }
    Err(invalid(format!("box projection onto sup norm {b} did not settle")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionKind {
    None,
    Mixture,
    Witness,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AscentStatus {
    Extremal,
    MaxIter,
    /// No tested direction has a positive predicted slope.
    Stalled,
    LineSearchFailed,
    /// `lambda_1 - lambda_0` fell below `1e-6`.
    GapCollapsed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub lambda0: f64,
    pub lambda1: f64,
    pub cluster_dim: usize,
    /// Accepted step; zero when no step was taken.
    pub step: f64,
    pub direction: DirectionKind,
    /// Sup norm of the direction before normalization.
    pub direction_norm: f64,
    pub predicted_slope: f64,
    pub halvings: usize,
    pub fallback: bool,
    pub verdict: String,
    pub worst_violation: f64,
    pub sup_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AscentTrace {
    pub config: AscentConfig,
    pub records: Vec<IterationRecord>,
    pub status: Option<AscentStatus>,
    /// `8 pi (genus + 1)`.
    pub ceiling: f64,
    pub tol: f64,
    pub initial_lambda1: f64,
    pub final_lambda1: f64,
    pub accepted_steps: usize,
    pub mesh_checksum: String,
}

impl AscentTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "iter,lambda0,lambda1,cluster_dim,step,direction,direction_norm,predicted_slope,halvings,fallback,verdict,worst_violation,sup_norm\n",
        );
        for r in &self.records {
            let dir = match r.direction {
                DirectionKind::None => "none",
                DirectionKind::Mixture => "mixture",
                DirectionKind::Witness => "witness",
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.iter,
                fmt17(r.lambda0),
                fmt17(r.lambda1),
                r.cluster_dim,
                fmt17(r.step),
                dir,
                fmt17(r.direction_norm),
                fmt17(r.predicted_slope),
                r.halvings,
                r.fallback,
                r.verdict,
                fmt17(r.worst_violation),
                fmt17(r.sup_norm),
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Largest decrease of `lambda_1` between consecutive records.
    pub fn max_decrease(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[0].lambda1 - w[1].lambda1)
            .fold(0.0, f64::max)
    }
}

/// Eigensolver or input failure during the ascent, with the trace so far.
#[derive(Debug)]
pub struct AscentFailure {
    pub error: Error,
    pub trace: AscentTrace,
}

impl fmt::Display for AscentFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ascent failed after {} iterations: {}", self.trace.records.len(), self.error)
    }
}

impl std::error::Error for AscentFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Maximizes `lambda_1` from `v0`; see the module documentation.
pub fn maximize_lambda1(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    v0: &Potential,
    config: &AscentConfig,
) -> std::result::Result<(Potential, AscentTrace), AscentFailure> {
    let mut trace = AscentTrace {
        config: config.clone(),
        records: Vec::new(),
        status: None,
        ceiling: EIGHT_PI * (mesh.genus as f64 + 1.0),
        tol: 0.0,
        initial_lambda1: f64::NAN,
        final_lambda1: f64::NAN,
        accepted_steps: 0,
        mesh_checksum: ops.mesh_checksum().to_string(),
    };
    match run(mesh, ops, v0, config, &mut trace) {
        Ok(v) => Ok((v, trace)),
        Err(error) => Err(AscentFailure { error, trace }),
    }
}

fn check_start(mesh: &SurfaceMesh, ops: &DiscreteOperators, v0: &Potential, config: &AscentConfig) -> Result<()> {
    if mesh.checksum() != ops.mesh_checksum() || v0.mesh_checksum() != ops.mesh_checksum() {
        return Err(invalid("mesh, operators and potential must match"));
    }
    if !(config.box_bound > 0.0 && config.step0 > 0.0 && config.armijo >= 0.0) {
        return Err(invalid("box bound and step must be positive"));
    }
    if v0.sup_norm() > config.box_bound * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "initial sup norm {} exceeds the box bound {}",
            v0.sup_norm(),
            config.box_bound
        )));
    }
    let mean: f64 = ops.mass.iter().zip(v0.values()).map(|(m, x)| m * x).sum();
    if mean.abs() > 1e-10 * v0.sup_norm().max(1.0) {
        return Err(invalid(format!("initial potential has mean {mean}")));
    }
    Ok(())
}

fn run(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    v0: &Potential,
    config: &AscentConfig,
    trace: &mut AscentTrace,
) -> Result<Potential> {
    check_start(mesh, ops, v0, config)?;
    let eig = config.eigen();
    let ext = config.extremal();
    let mut v = v0.clone();
    let mut spec = solve_spectrum_complete(ops, Some(&v), &eig)?;
    trace.initial_lambda1 = spec.lambda1();
    trace.final_lambda1 = spec.lambda1();

    for iter in 0..=config.max_iter {
        let lambda1 = spec.lambda1();
        let tol = config.stop_tol.unwrap_or(1e-6 * lambda1.abs().max(1.0));
        trace.tol = tol;
        let cluster = spec.lambda1_cluster().to_vec();
        let mut record = IterationRecord {
            iter,
            lambda0: spec.lambda0(),
            lambda1,
            cluster_dim: cluster.len(),
            step: 0.0,
            direction: DirectionKind::None,
            direction_norm: 0.0,
            predicted_slope: 0.0,
            halvings: 0,
            fallback: false,
            verdict: String::new(),
            worst_violation: f64::NAN,
            sup_norm: v.sup_norm(),
        };
        if lambda1 - spec.lambda0() < 1e-6 {
            record.verdict = "gap_collapsed".into();
            trace.records.push(record);
            trace.status = Some(AscentStatus::GapCollapsed);
            break;
        }
        let report = indefiniteness_test(mesh, ops, &spec, &ext)?;
        record.verdict = report.verdict.label().into();
        record.worst_violation = report.worst_violation();
        if report.verdict.is_consistent() {
            trace.records.push(record);
            trace.status = Some(AscentStatus::Extremal);
            break;
        }
        if iter == config.max_iter {
            trace.records.push(record);
            trace.status = Some(AscentStatus::MaxIter);
            break;
        }

        let mix = ascent_direction(ops, &spec, &cluster)?;
        record.fallback = mix.fallback;
        let mut best = (DirectionKind::Mixture, mix.q, mix.slope);
        if let Verdict::NotExtremal { witness } = &report.verdict {
            let raw = witness.ascent(ops)?;
            let q = unit_sup(raw, ops)?;
            let slope = first_variation(ops, &spec, &cluster, &q)?[0];
            if slope > best.2 {
                best = (DirectionKind::Witness, q, slope);
            }
        }
        let (kind, q, slope) = best;
        record.direction = kind;
        record.direction_norm = q.sup_norm();
        record.predicted_slope = slope;
        if !(slope > tol) {
            trace.records.push(record);
            trace.status = Some(AscentStatus::Stalled);
            break;
        }

        let mut step = config.step0;
        let mut accepted = None;
        for h in 0..=config.max_halvings {
            let f: Vec<f64> = v.values().iter().zip(q.values()).map(|(a, b)| a + step * b).collect();
            let trial = project_box(&f, ops, config.box_bound)?;
            let trial_spec = solve_spectrum_complete(ops, Some(&trial), &eig)?;
            if trial_spec.lambda1() >= lambda1 + config.armijo * step * slope {
                record.halvings = h;
                accepted = Some((trial, trial_spec));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, trial_spec)) => {
                record.step = step;
                trace.records.push(record);
                trace.accepted_steps += 1;
                v = trial;
                spec = trial_spec;
                trace.final_lambda1 = spec.lambda1();
            }
            None => {
                record.halvings = config.max_halvings;
                trace.records.push(record);
                trace.status = Some(AscentStatus::LineSearchFailed);
                break;
            }
        }
    }
    Ok(v)
}
