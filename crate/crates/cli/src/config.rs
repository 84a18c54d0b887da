//! Per-command JSON configuration. Every struct rejects unknown keys and
//! fills missing ones from its defaults.

use std::path::PathBuf;

use lambda1_core::extremal::{smooth_probe, ExtremalConfig};
use lambda1_core::{
    assemble, build_icosphere, build_torus, mobius_extremal, AscentConfig, DiscreteOperators, EigenConfig,
    Lattice, MobiusMap, Potential, SurfaceMesh,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    Sphere { level: u32 },
    Torus { lattice: Lattice, n: usize },
}

impl MeshSpec {
    pub fn build(&self) -> Result<(SurfaceMesh, DiscreteOperators), CliError> {
        let mesh = match self {
            MeshSpec::Sphere { level } => build_icosphere(*level)?,
            MeshSpec::Torus { lattice, n } => build_torus(lattice, *n)?,
        };
        let ops = assemble(&mesh)?;
        Ok((mesh, ops))
    }
}

fn sphere(level: u32) -> MeshSpec {
    MeshSpec::Sphere { level }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    /// CSV written by this tool; the mesh checksum must match.
    File { path: PathBuf },
    /// Smooth random field seeded by the top-level seed.
    Random { amplitude: f64, degree: usize },
    /// `8 pi - e_s` for the dilation with ball parameter `center`.
    Mobius { center: [f64; 3] },
}

impl PotentialSpec {
    pub fn build(&self, mesh: &SurfaceMesh, ops: &DiscreteOperators, seed: u64) -> Result<Potential, CliError> {
        Ok(match self {
            PotentialSpec::Zero => Potential::zero(ops),
            PotentialSpec::File { path } => {
                if !path.is_file() {
                    return Err(CliError::config(format!("potential file {} not found", path.display())));
                }
                Potential::read_csv(path, ops)?
            }
            PotentialSpec::Random { amplitude, degree } => smooth_probe(mesh, ops, *degree, seed)?.scaled(*amplitude, ops)?,
            PotentialSpec::Mobius { center } => mobius_extremal(mesh, ops, &MobiusMap::from_ball(*center)?)?,
        })
    }
}

/// Shared behaviour of the command configurations.
pub trait CommandConfig: Serialize + DeserializeOwned + Default + Send + Sync {
    /// Replaces the top-level seed and every nested one.
    fn override_seed(&mut self, seed: u64);
    /// Worker threads; zero means one per core.
    fn threads(&self) -> usize;
}

macro_rules! seeded {
    ($ty:ty $(, $nested:ident)*) => {
        impl CommandConfig for $ty {
            fn override_seed(&mut self, seed: u64) {
                self.seed = seed;
                $(self.$nested.seed = seed;)*
            }
            fn threads(&self) -> usize {
                self.threads
            }
        }
    };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenCmd {
    pub mesh: MeshSpec,
    pub potential: PotentialSpec,
    pub seed: u64,
    pub threads: usize,
    pub eigen: EigenConfig,
}

impl Default for EigenCmd {
    fn default() -> Self {
        EigenCmd {
            mesh: sphere(4),
            potential: PotentialSpec::Zero,
            seed: 0,
            threads: 0,
            eigen: EigenConfig::default(),
        }
    }
}
seeded!(EigenCmd, eigen);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtremalCmd {
    pub mesh: MeshSpec,
    pub potential: PotentialSpec,
    pub seed: u64,
    pub threads: usize,
    pub eigen: EigenConfig,
    pub extremal: ExtremalConfig,
    pub sos_tol: f64,
    pub sos_maxiter: usize,
}

impl Default for ExtremalCmd {
    fn default() -> Self {
        ExtremalCmd {
            mesh: sphere(4),
            potential: PotentialSpec::Zero,
            seed: 0,
            threads: 0,
            eigen: EigenConfig::default(),
            extremal: ExtremalConfig::default(),
            sos_tol: 1e-10,
            sos_maxiter: 500,
        }
    }
}
seeded!(ExtremalCmd, eigen, extremal);

/// Concentrating dilations `t` at `target_vertex`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilyCmd {
    pub mesh: MeshSpec,
    pub target_vertex: usize,
    pub t: Vec<f64>,
    /// Bubble window `R`.
    pub window: f64,
    pub seed: u64,
    pub threads: usize,
    pub eigen: EigenConfig,
}

impl Default for FamilyCmd {
    fn default() -> Self {
        FamilyCmd {
            mesh: sphere(5),
            target_vertex: 0,
            t: vec![0.0, 0.3, 0.5, 0.7, 0.85],
            window: 12.0,
            seed: 0,
            threads: 0,
            eigen: EigenConfig::default(),
        }
    }
}
seeded!(FamilyCmd, eigen);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaximizeCmd {
    pub mesh: MeshSpec,
    pub start: PotentialSpec,
    pub seed: u64,
    pub threads: usize,
    pub ascent: AscentConfig,
}

impl Default for MaximizeCmd {
    fn default() -> Self {
        MaximizeCmd {
            mesh: sphere(4),
            start: PotentialSpec::Random {
                amplitude: 10.0,
                degree: 4,
            },
            seed: 0,
            threads: 0,
            ascent: AscentConfig::default(),
        }
    }
}
seeded!(MaximizeCmd, ascent);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Uniform,
    /// `exp(kappa <x, axis / |axis|>)` on the unit sphere.
    Bump { axis: [f64; 3], kappa: f64 },
    /// Squared ground state of the configured potential.
    GroundState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HerschCmd {
    pub mesh: MeshSpec,
    pub density: DensitySpec,
    /// Potential for the upper bound.
    pub potential: PotentialSpec,
    pub tol: f64,
    pub seed: u64,
    pub threads: usize,
    pub eigen: EigenConfig,
}

impl Default for HerschCmd {
    fn default() -> Self {
        HerschCmd {
            mesh: sphere(4),
            density: DensitySpec::GroundState,
            potential: PotentialSpec::Zero,
            tol: 1e-12,
            seed: 0,
            threads: 0,
            eigen: EigenConfig::default(),
        }
    }
}
seeded!(HerschCmd, eigen);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BubbleSource {
    /// Energy density of the dilation concentrating at the vertex.
    Dilation { target_vertex: usize, t: f64 },
    /// Energy density of the certificate functions of a potential.
    Certificate { potential: PotentialSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BubbleCmd {
    pub mesh: MeshSpec,
    pub source: BubbleSource,
    pub window: f64,
    pub seed: u64,
    pub threads: usize,
    pub eigen: EigenConfig,
}

impl Default for BubbleCmd {
    fn default() -> Self {
        BubbleCmd {
            mesh: sphere(5),
            source: BubbleSource::Dilation {
                target_vertex: 0,
                t: 0.85,
            },
            window: 12.0,
            seed: 0,
            threads: 0,
            eigen: EigenConfig::default(),
        }
    }
}
seeded!(BubbleCmd, eigen);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshCmd {
    pub mesh: MeshSpec,
    pub seed: u64,
    pub threads: usize,
}

impl Default for MeshCmd {
    fn default() -> Self {
        MeshCmd {
            mesh: sphere(4),
            seed: 0,
            threads: 0,
        }
    }
}
seeded!(MeshCmd);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let text = serde_json::to_string(&MaximizeCmd::default()).unwrap();
        let back: MaximizeCmd = serde_json::from_str(&text).unwrap();
        assert_eq!(back, MaximizeCmd::default());
        let text = serde_json::to_string(&BubbleCmd::default()).unwrap();
        assert_eq!(serde_json::from_str::<BubbleCmd>(&text).unwrap(), BubbleCmd::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<EigenCmd>(r#"{"mesh": {"kind": "sphere", "level": 2}, "levle": 3}"#).is_err());
        assert!(serde_json::from_str::<EigenCmd>(r#"{"mesh": {"kind": "sphere", "level": 2, "n": 3}}"#).is_err());
        assert!(serde_json::from_str::<EigenCmd>(r#"{"eigen": {"kk": 3}}"#).is_err());
        let ok: EigenCmd = serde_json::from_str(r#"{"mesh": {"kind": "torus", "lattice": "clifford", "n": 8}}"#).unwrap();
        assert_eq!(ok.eigen, EigenConfig::default());
    }

    #[test]
    fn seed_override_reaches_nested_configs() {
        let mut c = ExtremalCmd::default();
        c.override_seed(9);
        assert_eq!((c.seed, c.eigen.seed, c.extremal.seed), (9, 9, 9));
    }
}
