use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::assembly::{assemble, energy_density};
use crate::eigen::{solve_spectrum, solve_with_values, EigenConfig};
use crate::error::Error;
use crate::geometry::{build_icosphere, build_torus, Lattice};
use crate::mobius::{energy_density_on_mesh, MobiusMap};
use crate::potentials::{concentration_family, mobius_extremal};
use crate::EIGHT_PI;

fn setup(mesh: SurfaceMesh) -> (SurfaceMesh, DiscreteOperators) {
    let ops = assemble(&mesh).unwrap();
    (mesh, ops)
}

fn sphere(level: u32) -> (SurfaceMesh, DiscreteOperators) {
    setup(build_icosphere(level).unwrap())
}

fn tight() -> EigenConfig {
    EigenConfig {
        tol: 1e-10,
        ..EigenConfig::default()
    }
}

fn random_potential(mesh: &SurfaceMesh, ops: &DiscreteOperators, amp: f64, seed: u64) -> Potential {
    smooth_probe(mesh, ops, 4, seed).unwrap().scaled(amp, ops).unwrap()
}

fn mass_l2(ops: &DiscreteOperators, f: &[f64]) -> f64 {
    ops.mass.iter().zip(f).map(|(m, x)| m * x * x).sum::<f64>().sqrt()
}

#[test]
fn zero_probe_has_zero_variation() {
    let (_, ops) = sphere(2);
    let spec = solve_spectrum(&ops, None, &EigenConfig::default()).unwrap();
    let d = first_variation(&ops, &spec, spec.lambda1_cluster(), &Potential::zero(&ops)).unwrap();
    assert_eq!(d, vec![0.0; 3]);
}

#[test]
fn cluster_mismatch_is_rejected() {
    let (_, ops) = sphere(2);
    let spec = solve_spectrum(&ops, None, &EigenConfig::default()).unwrap();
    let q = Potential::zero(&ops);
    assert!(first_variation(&ops, &spec, &[], &q).is_err());
    assert!(first_variation(&ops, &spec, &[1, 99], &q).is_err());
    assert!(first_variation(&ops, &spec, &[1, 1], &q).is_err());
    let (_, other) = sphere(3);
    assert!(first_variation(&other, &spec, &[1], &Potential::zero(&other)).is_err());
}

#[test]
fn round_sphere_variations_are_indefinite() {
    let (mesh, ops) = sphere(3);
    let spec = solve_spectrum(&ops, None, &EigenConfig::default()).unwrap();
    for seed in 0..16 {
        let q = smooth_probe(&mesh, &ops, 8, seed).unwrap();
        let d = first_variation(&ops, &spec, spec.lambda1_cluster(), &q).unwrap();
        assert!(d[0] <= 1e-9 && d[2] >= -1e-9, "{d:?}");
    }
}

/// One-sided slopes of the cluster branches from re-solved spectra.
fn branch_slopes(ops: &DiscreteOperators, v: &[f64], q: &Potential, m: usize, t: f64) -> (f64, f64) {
    let at = |s: f64| {
        let f: Vec<f64> = v.iter().zip(q.values()).map(|(a, b)| a + s * b).collect();
        solve_with_values(ops, &f, &tight()).unwrap().eigenvalues[1..=m].to_vec()
    };
    let (plus, minus) = (at(t), at(-t));
    // Branch with the smallest slope is lowest at +t and highest at -t.
    let min_slope = (plus[0] - minus[m - 1]) / (2.0 * t);
    let max_slope = (plus[m - 1] - minus[0]) / (2.0 * t);
    (min_slope, max_slope)
}

#[test]
fn variation_matches_finite_differences() {
    let (mesh, ops) = sphere(3);
    let cases: Vec<Potential> = vec![Potential::zero(&ops), random_potential(&mesh, &ops, 20.0, 7)];
    for v in cases {
        let spec = solve_spectrum(&ops, Some(&v), &tight()).unwrap();
        let cluster = spec.lambda1_cluster().to_vec();
        for seed in 0..3 {
            let q = smooth_probe(&mesh, &ops, 6, 100 + seed).unwrap();
            let d = first_variation(&ops, &spec, &cluster, &q).unwrap();
            let t = 1e-4 / q.sup_norm();
            let (lo, hi) = branch_slopes(&ops, v.values(), &q, cluster.len(), t);
            let scale = d.iter().fold(1e-3_f64, |m, x| m.max(x.abs()));
            assert!((lo - d[0]).abs() <= 1e-3 * scale, "{lo} vs {}", d[0]);
            assert!((hi - d[d.len() - 1]).abs() <= 1e-3 * scale, "{hi} vs {:?}", d.last());
        }
    }
}

#[test]
fn variation_spectrum_ignores_the_cluster_basis() {
    let (mesh, ops) = sphere(3);
    let spec = solve_spectrum(&ops, None, &EigenConfig::default()).unwrap();
    let cluster = spec.lambda1_cluster().to_vec();
    let m = cluster.len();
    // Seeded random orthogonal matrix via Gram-Schmidt.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut rot: Vec<Vec<f64>> = Vec::new();
    for _ in 0..m {
        let mut v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        for r in &rot {
            let c: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(r).for_each(|(x, y)| *x -= c * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        rot.push(v);
    }
    let mut rotated = spec.clone();
    for (a, r) in rot.iter().enumerate() {
        let mut f = vec![0.0; ops.dim()];
        for (b, &i) in cluster.iter().enumerate() {
            f.iter_mut().zip(&spec.eigenfunctions[i]).for_each(|(x, y)| *x += r[b] * y);
        }
        rotated.eigenfunctions[cluster[a]] = f;
    }
    for seed in 0..5 {
        let q = smooth_probe(&mesh, &ops, 8, seed).unwrap();
        let d1 = first_variation(&ops, &spec, &cluster, &q).unwrap();
        let d2 = first_variation(&ops, &rotated, &cluster, &q).unwrap();
        for (a, b) in d1.iter().zip(&d2) {
            assert!((a - b).abs() <= 1e-10);
        }
        let qm = variation_matrix(&ops, &spec, &cluster, &q).unwrap();
        for i in 0..m {
            for j in 0..m {
                assert_eq!(qm[i][j], qm[j][i]);
            }
        }
    }
}

#[test]
fn round_sphere_is_extremal_consistent() {
    let (mesh, ops) = sphere(3);
    let spec = solve_spectrum(&ops, None, &EigenConfig::default()).unwrap();
    let report = indefiniteness_test(&mesh, &ops, &spec, &ExtremalConfig::default()).unwrap();
    assert_eq!(report.verdict, Verdict::ExtremalConsistent);
    assert_eq!(report.probe_count, 64 + 3);
    assert!(report.worst_violation() <= report.tol);
}

#[test]
fn clifford_torus_is_extremal_consistent() {
    let (mesh, ops) = setup(build_torus(&Lattice::Clifford, 32).unwrap());
    let spec = solve_spectrum(&ops, None, &EigenConfig::default()).unwrap();
    assert_eq!(spec.lambda1_cluster().len(), 4);
    let report = indefiniteness_test(&mesh, &ops, &spec, &ExtremalConfig::default()).unwrap();
    assert_eq!(report.verdict, Verdict::ExtremalConsistent);
}

/// A smooth bump of height `amp` at the north pole, projected. Negative
/// heights keep `lambda_1` simple.
fn bump(mesh: &SurfaceMesh, ops: &DiscreteOperators, amp: f64) -> Potential {
    let f: Vec<f64> = mesh
        .unit_sphere_points()
        .iter()
        .map(|x| amp * (4.0 * (x[2] - 1.0)).exp())
        .collect();
    project_zero_mean(&f, ops).unwrap()
}

#[test]
fn bump_potential_is_not_extremal() {
    let (mesh, ops) = sphere(3);
    let v = bump(&mesh, &ops, -40.0);
    let spec = solve_spectrum(&ops, Some(&v), &EigenConfig::default()).unwrap();
    assert_eq!(spec.lambda1_cluster().len(), 1);
    let report = indefiniteness_test(&mesh, &ops, &spec, &ExtremalConfig::default()).unwrap();
    let Verdict::NotExtremal { witness } = &report.verdict else {
        panic!("expected a witness, got {:?}", report.verdict);
    };
    assert!(witness.min > report.tol || witness.max < -report.tol);
    assert!(witness.min.signum() == witness.max.signum());
    // The informed probe u_1^2 is definite: int (u^2 - 1) u^2 = int u^4 - 1 > 0.
    let sq: Vec<f64> = spec.eigenfunctions[1].iter().map(|x| x * x).collect();
    let q = project_zero_mean(&sq, &ops).unwrap();
    let d = first_variation(&ops, &spec, &[1], &q).unwrap();
    assert!(d[0] > 0.0);
    // Moving along the witness raises lambda_1.
    let dir = witness.ascent(&ops).unwrap();
    let stepped = v.add_scaled(&dir, 1e-2, &ops).unwrap();
    let after = solve_spectrum(&ops, Some(&stepped), &EigenConfig::default()).unwrap();
    assert!(after.lambda1() > spec.lambda1());
}

#[test]
fn reports_are_independent_of_thread_count() {
    let (mesh, ops) = sphere(2);
    let v = random_potential(&mesh, &ops, 8.0, 3);
    let spec = solve_spectrum(&ops, Some(&v), &EigenConfig::default()).unwrap();
    let cfg = ExtremalConfig {
        seed: 17,
        ..ExtremalConfig::default()
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| indefiniteness_test(&mesh, &ops, &spec, &cfg).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.probes, b.probes);
    assert_eq!(a.verdict, b.verdict);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn incomplete_clusters_are_inconclusive() {
    let (mesh, ops) = sphere(2);
    let cfg = EigenConfig {
        k: 2,
        ..EigenConfig::default()
    };
    let spec = solve_spectrum(&ops, None, &cfg).unwrap();
    let report = indefiniteness_test(&mesh, &ops, &spec, &ExtremalConfig::default()).unwrap();
    assert!(matches!(report.verdict, Verdict::Inconclusive { .. }));
}

fn identity_like(cert: &SosCertificate, c: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..cert.dimension {
        for j in 0..cert.dimension {
            let e = if i == j { c } else { 0.0 };
            worst = worst.max((cert.gram_entry(i, j) - e).abs());
        }
    }
    worst
}

#[test]
fn sphere_certificate_is_a_third_of_the_identity() {
    // Discrete eigenfunctions differ from the coordinates at O(h^2).
    let mut res = Vec::new();
    for level in [4, 5] {
        let (mesh, ops) = sphere(level);
        let spec = solve_spectrum(&ops, None, &EigenConfig::default()).unwrap();
        let cert = sos_certificate(&ops, &spec, spec.lambda1_cluster(), 1e-8, 500).unwrap();
        assert!(identity_like(&cert, 1.0 / 3.0) < 1e-6);
        assert!(cert.min_gram_eigenvalue() >= -1e-10);
        let (inf, l2) = cert.recompute_residuals(&ops);
        assert_eq!((inf, l2), (cert.residual_inf, cert.residual_l2));
        let rec = recover_potential(&ops, &mesh, &cert, spec.lambda1()).unwrap();
        assert!(rec.sup_norm() <= 0.02 * EIGHT_PI);
        res.push(cert.residual_inf);
    }
    assert!(res[1] <= 1e-3, "{res:?}");
    assert!(res[0] / res[1] > 3.0, "{res:?}");
}

#[test]
fn clifford_certificate_is_a_quarter_of_the_identity() {
    let (mesh, ops) = setup(build_torus(&Lattice::Clifford, 32).unwrap());
    let spec = solve_spectrum(&ops, None, &EigenConfig::default()).unwrap();
    let cert = sos_certificate(&ops, &spec, spec.lambda1_cluster(), 1e-8, 500).unwrap();
    assert!(identity_like(&cert, 0.25) < 1e-6);
    assert!(cert.residual_inf <= 1e-6);
    let rec = recover_potential(&ops, &mesh, &cert, spec.lambda1()).unwrap();
    assert!(rec.sup_norm() <= 1e-6 * spec.lambda1());
    // The certificate functions have constant energy density lambda_1.
    let density = energy_density(&ops, &mesh, &cert.functions).unwrap();
    let mean = density.iter().zip(&ops.mass).map(|(d, m)| d * m).sum::<f64>();
    assert!((mean / (4.0 * spec.lambda1()) - 1.0).abs() < 1e-9);
}

#[test]
fn mobius_certificate_recovers_the_potential() {
    let s = MobiusMap::from_ball([0.3, 0.0, 0.0]).unwrap();
    let mut res = Vec::new();
    for level in [4, 5] {
        let (mesh, ops) = sphere(level);
        let v = mobius_extremal(&mesh, &ops, &s).unwrap();
        let spec = solve_spectrum(&ops, Some(&v), &EigenConfig::default()).unwrap();
        assert_eq!(spec.lambda1_cluster().len(), 3);
        let cert = sos_certificate(&ops, &spec, spec.lambda1_cluster(), 1e-8, 500).unwrap();
        let rec = recover_potential(&ops, &mesh, &cert, spec.lambda1()).unwrap();
        let diff: Vec<f64> = rec.values().iter().zip(v.values()).map(|(a, b)| a - b).collect();
        let rel = mass_l2(&ops, &diff) / mass_l2(&ops, v.values()).max(spec.lambda1());
        assert!(rel < 0.03, "relative recovery error {rel}");
        res.push(cert.residual_inf);
    }
    assert!(res[1] <= 2e-3 && res[0] / res[1] > 3.0, "{res:?}");
}

#[test]
fn simple_clusters_give_unusable_certificates() {
    let (mesh, ops) = sphere(3);
    let v = bump(&mesh, &ops, -40.0);
    let spec = solve_spectrum(&ops, Some(&v), &EigenConfig::default()).unwrap();
    let cert = sos_certificate(&ops, &spec, spec.lambda1_cluster(), 1e-8, 500).unwrap();
    assert!(cert.residual_inf > RECOVERY_LIMIT_FOR_TESTS);
    assert!(matches!(
        recover_potential(&ops, &mesh, &cert, spec.lambda1()),
        Err(Error::CertificateUnusable { .. })
    ));
}

const RECOVERY_LIMIT_FOR_TESTS: f64 = 0.05;

#[test]
fn certificate_json_has_a_dimension_header() {
    let (_, ops) = sphere(2);
    let spec = solve_spectrum(&ops, None, &EigenConfig::default()).unwrap();
    let cert = sos_certificate(&ops, &spec, spec.lambda1_cluster(), 1e-8, 500).unwrap();
    let json: serde_json::Value = serde_json::to_value(&cert).unwrap();
    assert_eq!(json["dimension"], 3);
    assert_eq!(json["gram"].as_array().unwrap().len(), 9);
}

#[test]
fn flat_density_has_no_bubble() {
    let (mesh, ops) = sphere(3);
    let e = energy_density_on_mesh(&mesh, &MobiusMap::identity()).unwrap();
    let r = bubble_extract(&mesh, &ops, &e, 5.0).unwrap();
    assert!(r.no_bubble);
    assert!(bubble_extract(&mesh, &ops, &e, 0.0).is_err());
}

/// Fraction of `8 pi` inside the geodesic ball of radius `rho` around the
/// peak of the dilation with strength `t`.
fn cap_fraction(t: f64, rho: f64) -> f64 {
    let l = (1.0 + t) / (1.0 - t);
    let x = (l * (rho / 2.0).tan()).powi(2);
    x / (1.0 + x)
}

#[test]
fn concentrated_energy_matches_the_dilation_profile() {
    let (mesh, ops) = sphere(5);
    let fam = concentration_family(&mesh, &ops, 0, &[0.5, 0.85]).unwrap();
    let mut peaks = Vec::new();
    for m in &fam {
        let density = energy_density_on_mesh(&mesh, &m.map).unwrap();
        for window in [5.0, 12.0] {
            let r = bubble_extract(&mesh, &ops, &density, window).unwrap();
            assert!(!r.no_bubble);
            assert_eq!(r.peak_vertex, 0);
            // Unit-sphere radius of the window.
            let rho = r.radius * (4.0 * std::f64::consts::PI).sqrt();
            let oracle = cap_fraction(m.t, rho);
            let got = r.local_energy / EIGHT_PI;
            assert!(got <= oracle * 1.02 && got >= oracle * 0.9, "t {} R {window}: {got} vs {oracle}", m.t);
            assert_eq!(r.bubble_eigenvalue_estimate, r.local_energy);
        }
        peaks.push(density[0]);
    }
    assert!(peaks[1] > peaks[0]);
}
