//! Zero-mean potentials and the Mobius extremal family on the sphere.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::DiscreteOperators;
use crate::eigen::{fmt17, values_checksum};
use crate::error::{invalid, Error, Result};
use crate::geometry::SurfaceMesh;
use crate::mobius::{energy_density_on_mesh, MobiusMap};
use crate::EIGHT_PI;

/// Where a potential came from; recorded in CSV headers and manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Custom,
    /// Real and imaginary parts of `a, b, c, d`.
    Mobius([f64; 8]),
}

impl Generator {
    fn header(&self) -> String {
        match self {
            Generator::Custom => "custom".into(),
            Generator::Mobius(c) => {
                let parts: Vec<String> = c.iter().map(|x| fmt17(*x)).collect();
                format!("mobius:{}", parts.join(","))
            }
        }
    }

    fn parse(s: &str) -> Result<Self> {
        if s == "custom" {
            return Ok(Generator::Custom);
        }
        let body = s
            .strip_prefix("mobius:")
            .ok_or_else(|| Error::Format(format!("unknown generator '{s}'")))?;
        let vals: Vec<f64> = body
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("bad Mobius coefficient: {e}")))?;
        let arr: [f64; 8] = vals
            .try_into()
            .map_err(|_| Error::Format("Mobius generator needs 8 coefficients".into()))?;
        Ok(Generator::Mobius(arr))
    }
}

/// A vertex function with zero lumped mean on a specific mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    values: Vec<f64>,
    mesh_checksum: String,
    sup_norm: f64,
    generator: Generator,
}

impl Potential {
    pub fn zero(ops: &DiscreteOperators) -> Self {
        Potential {
            values: vec![0.0; ops.dim()],
            mesh_checksum: ops.mesh_checksum().to_string(),
            sup_norm: 0.0,
            generator: Generator::Custom,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mesh_checksum(&self) -> &str {
        &self.mesh_checksum
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn with_generator(mut self, generator: Generator) -> Self {
        self.generator = generator;
        self
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// SHA-256 of the value bits.
    pub fn checksum(&self) -> String {
        values_checksum(&self.values)
    }

    /// `V + t q`, re-projected.
    pub fn add_scaled(&self, q: &Potential, t: f64, ops: &DiscreteOperators) -> Result<Potential> {
        if q.mesh_checksum != self.mesh_checksum {
            return Err(invalid("potentials live on different meshes"));
        }
        let f: Vec<f64> = self.values.iter().zip(&q.values).map(|(a, b)| a + t * b).collect();
        project_zero_mean(&f, ops)
    }

    pub fn scaled(&self, c: f64, ops: &DiscreteOperators) -> Result<Potential> {
        let f: Vec<f64> = self.values.iter().map(|x| c * x).collect();
        Ok(project_zero_mean(&f, ops)?.with_generator(self.generator.clone()))
    }

    /// Header lines `# key=value`, then `vertex,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# mesh_checksum={}", self.mesh_checksum);
        let _ = writeln!(out, "# sup_norm={}", fmt17(self.sup_norm));
        let _ = writeln!(out, "# generator={}", self.generator.header());
        out.push_str("vertex,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{i},{}", fmt17(*v));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Parses a potential CSV for `ops`. A `mesh_checksum` header, when
    /// present, must match; values are re-projected to zero mean.
    pub fn from_csv(text: &str, ops: &DiscreteOperators) -> Result<Potential> {
        let mut generator = Generator::Custom;
        let mut values = vec![f64::NAN; ops.dim()];
        let mut seen = vec![false; ops.dim()];
        let mut header_done = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let (key, val) = meta.trim().split_once('=').unwrap_or((meta.trim(), ""));
                match key.trim() {
                    "mesh_checksum" if val.trim() != ops.mesh_checksum() => {
                        return Err(Error::ChecksumMismatch {
                            expected: ops.mesh_checksum().to_string(),
                            found: val.trim().to_string(),
                        })
                    }
                    "generator" => generator = Generator::parse(val.trim())?,
                    _ => {}
                }
                continue;
            }
            if !header_done {
                header_done = true;
                if line == "vertex,value" {
                    continue;
                }
            }
            let (i, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("line {}: expected 'vertex,value'", lineno + 1)))?;
            let i: usize = i
                .trim()
                .parse()
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
            if i >= values.len() {
                return Err(Error::Format(format!("vertex {i} out of range")));
            }
            values[i] = v;
            seen[i] = true;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Format(format!("no value for vertex {i}")));
        }
        Ok(project_zero_mean(&values, ops)?.with_generator(generator))
    }

    pub fn read_csv(path: &Path, ops: &DiscreteOperators) -> Result<Potential> {
        Self::from_csv(&std::fs::read_to_string(path)?, ops)
    }
}

fn lumped_mean(ops: &DiscreteOperators, f: &[f64]) -> f64 {
    let total: f64 = ops.mass.iter().sum();
    ops.mass.iter().zip(f).map(|(m, x)| m * x).sum::<f64>() / total
}

/// `f - int f dVol`.
pub fn project_zero_mean(f: &[f64], ops: &DiscreteOperators) -> Result<Potential> {
    ops.check_len(f, "vertex function")?;
    if f.iter().any(|x| !x.is_finite()) {
        return Err(invalid("vertex function has non-finite values"));
    }
    let mut values = f.to_vec();
    // A second pass removes the rounding left by the first.
    for _ in 0..2 {
        let c = lumped_mean(ops, &values);
        values.iter_mut().for_each(|x| *x -= c);
    }
    let sup_norm = values.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    Ok(Potential {
        values,
        mesh_checksum: ops.mesh_checksum().to_string(),
        sup_norm,
        generator: Generator::Custom,
    })
}

/// The extremal potential `8 pi - e_s` of a Mobius map `s`.
pub fn mobius_extremal(mesh: &SurfaceMesh, ops: &DiscreteOperators, s: &MobiusMap) -> Result<Potential> {
    if mesh.checksum() != ops.mesh_checksum() {
        return Err(invalid("operators were assembled on a different mesh"));
    }
    if *s == MobiusMap::identity() {
        return Ok(Potential::zero(ops).with_generator(Generator::Mobius(s.to_real8())));
    }
    let e = energy_density_on_mesh(mesh, s)?;
    let f: Vec<f64> = e.iter().map(|x| EIGHT_PI - x).collect();
    Ok(project_zero_mean(&f, ops)?.with_generator(Generator::Mobius(s.to_real8())))
}

/// One member of a concentrating family.
#[derive(Clone, Debug)]
pub struct FamilyMember {
    pub t: f64,
    pub map: MobiusMap,
    pub potential: Potential,
    pub max_density: f64,
    /// False when `max e_s * h^2` exceeds [`RESOLUTION_LIMIT`].
    pub resolved: bool,
}

/// Largest `max e_s * h^2` counted as resolved: the peak scale `e^-1/2`
/// must span about three edges.
pub const RESOLUTION_LIMIT: f64 = 0.15;

/// Extremal potentials of the dilations concentrating at vertex `target`
/// with strengths `t_list`.
pub fn concentration_family(
    mesh: &SurfaceMesh,
    ops: &DiscreteOperators,
    target: usize,
    t_list: &[f64],
) -> Result<Vec<FamilyMember>> {
    if !mesh.is_sphere() {
        return Err(invalid("concentration families need a sphere mesh"));
    }
    if target >= mesh.num_vertices() {
        return Err(invalid(format!("target vertex {target} out of range")));
    }
    if let Some(t) = t_list.iter().find(|t| !(0.0..1.0).contains(*t)) {
        return Err(invalid(format!("dilation strength {t} outside [0, 1)")));
    }
    let x = mesh.unit_sphere_point(target);
    let h = mesh.max_edge_length();
    t_list
        .par_iter()
        .map(|&t| {
            let map = MobiusMap::concentrating_at(x, t)?;
            let potential = mobius_extremal(mesh, ops, &map)?;
            let max_density = energy_density_on_mesh(mesh, &map)?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(FamilyMember {
                t,
                map,
                potential,
                max_density,
                resolved: max_density * h * h <= RESOLUTION_LIMIT,
            })
        })
        .collect()
}

/// `<V, phi> = int V phi dVol`.
pub fn weak_pairing(ops: &DiscreteOperators, v: &Potential, phi: &[f64]) -> Result<f64> {
    ops.check_len(phi, "test function")?;
    if v.mesh_checksum() != ops.mesh_checksum() {
        return Err(invalid("potential belongs to a different mesh"));
    }
    Ok(ops.mass.iter().zip(v.values()).zip(phi).map(|((m, a), b)| m * a * b).sum())
}

/// Pairing of `phi` with the distributional limit `8 pi (1 - delta_x)`, the
/// Dirac mass evaluated at the vertex nearest to `x`.
pub fn dirac_limit_pairing(ops: &DiscreteOperators, target: usize, phi: &[f64]) -> Result<f64> {
    ops.check_len(phi, "test function")?;
    let total: f64 = ops.mass.iter().zip(phi).map(|(m, p)| m * p).sum();
    Ok(EIGHT_PI * (total - phi[target]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, integrate};
    use crate::fields::smooth_random_field;
    use crate::geometry::build_icosphere;
    use proptest::prelude::*;

    fn sphere(level: u32) -> (SurfaceMesh, DiscreteOperators) {
        let mesh = build_icosphere(level).unwrap();
        let ops = assemble(&mesh).unwrap();
        (mesh, ops)
    }

    #[test]
    fn constants_project_to_zero() {
        let (_, ops) = sphere(2);
        let v = project_zero_mean(&vec![7.0; ops.dim()], &ops).unwrap();
        assert!(v.values().iter().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn bump_projects_to_zero_mean() {
        let (mesh, ops) = sphere(3);
        let f: Vec<f64> = mesh
            .unit_sphere_points()
            .iter()
            .map(|x| if x[2] > 0.9 { 1.0 } else { 0.0 })
            .collect();
        let v = project_zero_mean(&f, &ops).unwrap();
        assert!(integrate(&ops, v.values()).unwrap().abs() <= 1e-12);
        assert!(v.sup_norm() > 0.9);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let (_, ops) = sphere(1);
        let mut f = vec![0.0; ops.dim()];
        f[3] = f64::NAN;
        assert!(project_zero_mean(&f, &ops).is_err());
        assert!(project_zero_mean(&f[1..], &ops).is_err());
    }

    #[test]
    fn identity_extremal_is_zero() {
        let (mesh, ops) = sphere(3);
        let v = mobius_extremal(&mesh, &ops, &MobiusMap::identity()).unwrap();
        assert!(v.sup_norm() <= 1e-10);
    }

    #[test]
    fn extremal_potentials_have_zero_mean_and_lie_below_eight_pi() {
        let (mesh, ops) = sphere(4);
        for c in [[0.3, 0.0, 0.0], [0.1, -0.4, 0.2], [0.0, 0.0, -0.7]] {
            let s = MobiusMap::from_ball(c).unwrap();
            let v = mobius_extremal(&mesh, &ops, &s).unwrap();
            assert!(integrate(&ops, v.values()).unwrap().abs() <= 1e-10);
            // 8 pi - e_s < 8 pi, up to the projection shift.
            assert!(v.max() < EIGHT_PI * 1.01);
        }
    }

    #[test]
    fn concentration_deepens_the_well() {
        let (mesh, ops) = sphere(4);
        let fam = concentration_family(&mesh, &ops, 0, &[0.0, 0.5, 0.7, 0.85]).unwrap();
        assert!(fam[0].potential.sup_norm() <= 1e-10);
        for w in fam.windows(2) {
            assert!(w[1].potential.min() < w[0].potential.min());
            assert!(w[1].potential.sup_norm() >= w[0].potential.sup_norm());
            assert!(w[1].max_density > w[0].max_density);
        }
        // The well sits at the target vertex.
        let p = &fam[3].potential;
        let argmin = (0..p.values().len())
            .min_by(|&a, &b| p.values()[a].total_cmp(&p.values()[b]))
            .unwrap();
        assert_eq!(argmin, 0);
    }

    #[test]
    fn unresolved_members_are_flagged() {
        let (mesh, ops) = sphere(3);
        let fam = concentration_family(&mesh, &ops, 0, &[0.1, 0.995]).unwrap();
        assert!(fam[0].resolved);
        assert!(!fam[1].resolved);
        assert!(concentration_family(&mesh, &ops, 0, &[1.0]).is_err());
    }

    #[test]
    fn resolved_members_keep_eight_pi() {
        use crate::eigen::{solve_spectrum, EigenConfig};
        for level in [3, 4] {
            let (mesh, ops) = sphere(level);
            let fam = concentration_family(&mesh, &ops, 0, &[0.3, 0.5, 0.7, 0.8]).unwrap();
            for m in fam.iter().filter(|m| m.resolved) {
                let l = solve_spectrum(&ops, Some(&m.potential), &EigenConfig::default()).unwrap().lambda1();
                assert!((l / EIGHT_PI - 1.0).abs() < 0.02, "level {level} t {}", m.t);
            }
        }
    }

    #[test]
    fn pairings_against_constants_vanish() {
        let (mesh, ops) = sphere(3);
        let s = MobiusMap::from_ball([0.2, 0.5, 0.1]).unwrap();
        let v = mobius_extremal(&mesh, &ops, &s).unwrap();
        assert!(weak_pairing(&ops, &v, &vec![1.0; ops.dim()]).unwrap().abs() < 1e-10);
        let phi = smooth_random_field(&mesh, 4, 1);
        assert_eq!(weak_pairing(&ops, &Potential::zero(&ops), &phi).unwrap(), 0.0);
    }

    #[test]
    fn csv_round_trip_preserves_values_and_generator() {
        let (mesh, ops) = sphere(2);
        let s = MobiusMap::from_ball([0.1, 0.2, -0.3]).unwrap();
        let v = mobius_extremal(&mesh, &ops, &s).unwrap();
        let back = Potential::from_csv(&v.to_csv(), &ops).unwrap();
        assert_eq!(back.generator(), v.generator());
        for (a, b) in back.values().iter().zip(v.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let other = assemble(&build_icosphere(2).unwrap()).unwrap();
        assert_eq!(other.mesh_checksum(), ops.mesh_checksum());
        let tampered = v.to_csv().replace(ops.mesh_checksum(), &"0".repeat(64));
        assert!(matches!(
            Potential::from_csv(&tampered, &ops),
            Err(Error::ChecksumMismatch { .. })
        ));
        let truncated: String = v.to_csv().lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(Potential::from_csv(&truncated, &ops).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn projection_is_idempotent(seed in 0u64..1000, scale in 0.1f64..100.0, shift in -50.0f64..50.0) {
            let (mesh, ops) = sphere(2);
            let f: Vec<f64> = smooth_random_field(&mesh, 6, seed).iter().map(|x| scale * x + shift).collect();
            let v = project_zero_mean(&f, &ops).unwrap();
            prop_assert!(integrate(&ops, v.values()).unwrap().abs() <= 1e-10);
            let w = project_zero_mean(v.values(), &ops).unwrap();
            for (a, b) in v.values().iter().zip(w.values()) {
                prop_assert!((a - b).abs() <= 1e-15 * scale.max(1.0));
            }
        }
    }
}
