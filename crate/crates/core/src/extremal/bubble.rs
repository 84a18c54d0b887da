//! Peak energy density and the energy carried by the concentration window
//! around it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::assembly::{energy_density, DiscreteOperators};
use crate::error::{invalid, Result};
use crate::geometry::SurfaceMesh;

/// Density within this factor of its mean counts as unconcentrated.
const FLAT_RATIO: f64 = 1.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleReport {
    /// True when the density is constant within 2%.
    pub no_bubble: bool,
    pub lambda_max: f64,
    pub peak_vertex: usize,
    /// `R / sqrt(lambda_max)` in the unit-area metric.
    pub radius: f64,
    pub local_energy: f64,
    pub total_energy: f64,
    pub bubble_eigenvalue_estimate: f64,
    pub window: f64,
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    // Reversed for a min-heap; ties broken by vertex index.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Edge-length graph distances from `source`, truncated at `limit`.
fn graph_ball(mesh: &SurfaceMesh, source: usize, limit: f64) -> Vec<usize> {
    let adj = mesh.neighbors();
    let mut dist = vec![f64::INFINITY; mesh.num_vertices()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Item(0.0, source));
    let mut inside = Vec::new();
    while let Some(Item(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        inside.push(v);
        for &w in &adj[v] {
            let nd = d + mesh.edge_length(v, w);
            if nd <= limit && nd < dist[w] {
                dist[w] = nd;
                heap.push(Item(nd, w));
            }
        }
    }
    inside.sort_unstable();
    inside
}

/// Bubble diagnostics of a vertex energy density with window `R`: the
/// energy inside the graph-distance ball of radius `R / sqrt(lambda_max)`
/// around the peak.
pub fn bubble_extract(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    density: &[f64],
    window: f64,
) -> Result<BubbleReport> {
    ops.check_len(density, "energy density")?;
    if !(window > 0.0 && window.is_finite()) {
        return Err(invalid("bubble window must be positive"));
    }
    if mesh.checksum() != ops.mesh_checksum() {
        return Err(invalid("operators were assembled on a different mesh"));
    }
    let total: f64 = ops.mass.iter().zip(density).map(|(m, e)| m * e).sum();
    let mass: f64 = ops.mass.iter().sum();
    let mean = total / mass;
    let (peak_vertex, lambda_max) = density
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, e)| if e > best.1 { (i, e) } else { best });
    if lambda_max <= FLAT_RATIO * mean || lambda_max <= 0.0 {
        return Ok(BubbleReport {
            no_bubble: true,
            lambda_max,
            peak_vertex,
            radius: 0.0,
            local_energy: 0.0,
            total_energy: total,
            bubble_eigenvalue_estimate: 0.0,
            window,
        });
    }
    let radius = window / lambda_max.sqrt();
    let local_energy = graph_ball(mesh, peak_vertex, radius)
        .iter()
        .map(|&v| ops.mass[v] * density[v])
        .sum();
    Ok(BubbleReport {
        no_bubble: false,
        lambda_max,
        peak_vertex,
        radius,
        local_energy,
        total_energy: total,
        bubble_eigenvalue_estimate: local_energy,
        window,
    })
}

/// [`bubble_extract`] on the energy density of a family of functions, such
/// as factorized certificate functions.
pub fn bubble_from_functions(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    functions: &[Vec<f64>],
    window: f64,
) -> Result<BubbleReport> {
    let density = energy_density(ops, mesh, functions)?;
    bubble_extract(mesh, ops, &density, window)
}
