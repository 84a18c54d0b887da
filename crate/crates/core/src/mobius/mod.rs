//! Mobius transformations of the Riemann sphere acting on the unit sphere.
//!
//! Points of the unit sphere are identified with the extended plane by
//! stereographic projection from the north pole, `z = (x + i y) / (1 - w)`,
//! and handled in homogeneous coordinates so that the pole needs no special
//! case.
//!
//! Energy densities follow one convention throughout: `e_s` is
//! `sum_i |grad (y^i o s o phi)|^2` measured in the unit-area metric, where
//! `phi` identifies the unit-area sphere with the unit sphere. Since `phi`
//! scales lengths by `sqrt(4 pi)`, the identity has `e = 2 * 4 pi = 8 pi`
//! at every point and every `s` has total energy `8 pi`.

mod bound;
mod hersch;

pub use bound::{sphere_upper_bound, BoundReport};
pub use hersch::{ball_map, ball_map_jacobian, hersch_balance, hersch_balance_points, BalanceResult};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::SurfaceMesh;
use crate::linalg::norm;
use crate::EIGHT_PI;

/// `z -> (a z + b) / (c z + d)` with `ad - bc = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

/// Homogeneous coordinates of a unit-sphere point, chosen away from the
/// degenerate chart and normalized to unit length.
fn homogeneous(x: [f64; 3]) -> (Complex64, Complex64) {
    let (z1, z2) = if x[2] <= 0.0 {
        (Complex64::new(x[0], x[1]), Complex64::new(1.0 - x[2], 0.0))
    } else {
        (Complex64::new(1.0 + x[2], 0.0), Complex64::new(x[0], -x[1]))
    };
    let s = (z1.norm_sqr() + z2.norm_sqr()).sqrt();
    (z1 / s, z2 / s)
}

impl MobiusMap {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        MobiusMap {
            a: one,
            b: zero,
            c: zero,
            d: one,
        }
    }

    /// Normalizes the coefficients to determinant one.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        let scale = (a.norm_sqr() + b.norm_sqr() + c.norm_sqr() + d.norm_sqr()).max(f64::MIN_POSITIVE);
        if !det.is_finite() || det.norm() <= 1e-14 * scale {
            return Err(invalid("Mobius coefficients are singular"));
        }
        let r = det.sqrt();
        Ok(MobiusMap {
            a: a / r,
            b: b / r,
            c: c / r,
            d: d / r,
        })
    }

    /// Conformal dilation of the sphere associated with a point of the open
    /// unit ball: the hyperbolic translation taking the ball's center to
    /// `center`. It pushes mass towards `center / |center|` and stretches
    /// the neighbourhood of the antipode.
    pub fn from_ball(center: [f64; 3]) -> Result<Self> {
        let t = norm(center);
        if t >= 1.0 || !t.is_finite() {
            return Err(invalid("dilation center must lie in the open unit ball"));
        }
        if t == 0.0 {
            return Ok(Self::identity());
        }
        let n = [center[0] / t, center[1] / t, center[2] / t];
        let (z1, z2) = homogeneous(n);
        // U maps the north pole to n; D = diag(sqrt l, 1/sqrt l) is z -> l z.
        let l = ((1.0 + t) / (1.0 - t)).sqrt();
        let (u11, u12, u21, u22) = (z1, -z2.conj(), z2, z1.conj());
        // U D U^*
        let a = u11 * l * u11.conj() + u12 / l * u12.conj();
        let b = u11 * l * u21.conj() + u12 / l * u22.conj();
        let c = u21 * l * u11.conj() + u22 / l * u12.conj();
        let d = u21 * l * u21.conj() + u22 / l * u22.conj();
        Self::new(a, b, c, d)
    }

    /// Dilation whose energy density peaks at the unit vector `target`, with
    /// strength `t` in `[0, 1)`.
    pub fn concentrating_at(target: [f64; 3], t: f64) -> Result<Self> {
        let r = norm(target);
        if r == 0.0 {
            return Err(invalid("concentration target must be nonzero"));
        }
        Self::from_ball([-t * target[0] / r, -t * target[1] / r, -t * target[2] / r])
    }

    /// `self o other`.
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        MobiusMap::new(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )
        .expect("product of unimodular maps is unimodular")
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn determinant_defect(&self) -> f64 {
        (self.a * self.d - self.b * self.c - 1.0).norm()
    }

    /// Image of a unit-sphere point.
    pub fn apply(&self, x: [f64; 3]) -> [f64; 3] {
        let (z1, z2) = homogeneous(x);
        let w1 = self.a * z1 + self.b * z2;
        let w2 = self.c * z1 + self.d * z2;
        let q = w1 * w2.conj();
        let s = w1.norm_sqr() + w2.norm_sqr();
        [2.0 * q.re / s, 2.0 * q.im / s, (w1.norm_sqr() - w2.norm_sqr()) / s]
    }

    /// Linear stretch factor `|ds|` of the map at `x` with respect to the
    /// round metric.
    pub fn conformal_factor(&self, x: [f64; 3]) -> f64 {
        let (z1, z2) = homogeneous(x);
        let w1 = self.a * z1 + self.b * z2;
        let w2 = self.c * z1 + self.d * z2;
        1.0 / (w1.norm_sqr() + w2.norm_sqr())
    }

    /// `e_s` at a unit-sphere point in the unit-area convention.
    pub fn energy_density_at(&self, x: [f64; 3]) -> f64 {
        EIGHT_PI * self.conformal_factor(x).powi(2)
    }

    /// Real and imaginary parts of `a, b, c, d`.
    pub fn to_real8(&self) -> [f64; 8] {
        [
            self.a.re, self.a.im, self.b.re, self.b.im, self.c.re, self.c.im, self.d.re, self.d.im,
        ]
    }

    pub fn from_real8(v: [f64; 8]) -> Result<Self> {
        Self::new(
            Complex64::new(v[0], v[1]),
            Complex64::new(v[2], v[3]),
            Complex64::new(v[4], v[5]),
            Complex64::new(v[6], v[7]),
        )
    }

    /// Largest coefficient difference to another map, up to the sign
    /// ambiguity of the unimodular representative.
    pub fn distance(&self, other: &MobiusMap) -> f64 {
        let diff = |s: f64| {
            [
                self.a - other.a * s,
                self.b - other.b * s,
                self.c - other.c * s,
                self.d - other.d * s,
            ]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
        };
        diff(1.0).min(diff(-1.0))
    }
}

impl Serialize for MobiusMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_real8().serialize(s)
    }
}

impl<'de> Deserialize<'de> for MobiusMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 8]>::deserialize(d)?;
        MobiusMap::from_real8(v).map_err(serde::de::Error::custom)
    }
}

/// `e_s` at every vertex of a sphere mesh.
pub fn energy_density_on_mesh(mesh: &SurfaceMesh, s: &MobiusMap) -> Result<Vec<f64>> {
    if !mesh.is_sphere() {
        return Err(invalid("Mobius energy densities need a sphere mesh"));
    }
    Ok(mesh
        .unit_sphere_points()
        .into_iter()
        .map(|x| s.energy_density_at(x))
        .collect())
}
