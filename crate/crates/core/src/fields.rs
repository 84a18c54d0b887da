//! Seeded smooth random vertex functions: real spherical harmonics on the
//! sphere, lattice Fourier modes on tori.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{SurfaceKind, SurfaceMesh};

/// Fully normalized associated Legendre values `P_l^m(t)` for `l <= lmax`,
/// indexed `[l][m]`.
fn legendre(lmax: usize, t: f64) -> Vec<Vec<f64>> {
    let s = (1.0 - t * t).max(0.0).sqrt();
    let mut p = vec![vec![0.0; lmax + 1]; lmax + 1];
    p[0][0] = 1.0;
    if lmax >= 1 {
        p[1][1] = 3f64.sqrt() * s;
    }
    for m in 2..=lmax {
        p[m][m] = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s * p[m - 1][m - 1];
    }
    for m in 0..lmax {
        p[m + 1][m] = ((2 * m + 3) as f64).sqrt() * t * p[m][m];
    }
    for m in 0..=lmax {
        for l in m + 2..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[l][m] = a * (t * p[l - 1][m] - b * p[l - 2][m]);
        }
    }
    p
}

/// Real spherical harmonics of degrees `1..=lmax` at a unit vector, in the
/// order `(l, m)` with `m` running over `-l..=l`.
pub fn spherical_harmonics(lmax: usize, x: [f64; 3]) -> Vec<f64> {
    let p = legendre(lmax, x[2].clamp(-1.0, 1.0));
    let phi = x[1].atan2(x[0]);
    let mut out = Vec::with_capacity((lmax + 1) * (lmax + 1) - 1);
    for l in 1..=lmax {
        for m in -(l as i64)..=(l as i64) {
            let ma = m.unsigned_abs() as usize;
            let v = match m.cmp(&0) {
                std::cmp::Ordering::Less => p[l][ma] * (ma as f64 * phi).sin(),
                std::cmp::Ordering::Equal => p[l][0],
                std::cmp::Ordering::Greater => p[l][ma] * (ma as f64 * phi).cos(),
            };
            out.push(v);
        }
    }
    out
}

/// Random combination of modes of degree `1..=degree` with coefficients
/// `N(0, 1) / (1 + degree_of_mode)`, scaled to unit sup norm. Does not
/// project to zero mean.
pub fn smooth_random_field(mesh: &SurfaceMesh, degree: usize, seed: u64) -> Vec<f64> {
    let degree = degree.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = match &mesh.kind {
        SurfaceKind::Sphere { .. } => {
            let coeffs: Vec<f64> = (1..=degree)
                .flat_map(|l| std::iter::repeat_n(l, 2 * l + 1))
                .map(|l| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    g / (1.0 + l as f64)
                })
                .collect();
            mesh.unit_sphere_points()
                .into_iter()
                .map(|x| {
                    spherical_harmonics(degree, x)
                        .iter()
                        .zip(&coeffs)
                        .map(|(y, c)| y * c)
                        .sum()
                })
                .collect::<Vec<f64>>()
        }
        SurfaceKind::Torus { .. } => {
            let d = degree as i64;
            let mut modes = Vec::new();
            for p in -d..=d {
                for q in -d..=d {
                    let rad = ((p * p + q * q) as f64).sqrt();
                    // Half of the frequency plane: (p, q) and (-p, -q) coincide.
                    if rad == 0.0 || rad > degree as f64 || (p, q) < (0, 0) {
                        continue;
                    }
                    let c: f64 = StandardNormal.sample(&mut rng);
                    let s: f64 = StandardNormal.sample(&mut rng);
                    modes.push((p as f64, q as f64, c / (1.0 + rad), s / (1.0 + rad)));
                }
            }
            (0..mesh.num_vertices())
                .map(|v| {
                    let [s, t] = mesh.lattice_coords(v).expect("torus mesh");
                    modes
                        .iter()
                        .map(|&(p, q, c, sn)| {
                            let arg = 2.0 * PI * (p * s + q * t);
                            c * arg.cos() + sn * arg.sin()
                        })
                        .sum()
                })
                .collect()
        }
    };
    let sup = f.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if sup > 0.0 {
        f.iter_mut().for_each(|x| *x /= sup);
    }
    f
}
