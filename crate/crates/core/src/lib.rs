//! Numerical laboratory for the first eigenvalue of Schrodinger operators
//! `-Laplace + V` with zero-mean potentials on unit-area spheres and flat tori.
//!
//! The pipeline runs bottom-up: [`geometry`] builds meshes, [`assembly`]
//! produces the stiffness form and lumped mass, [`eigen`] solves the
//! generalized eigenproblem, and the remaining modules build on spectra:
//! Mobius maps and Hersch balancing ([`mobius`]), potentials ([`potentials`]),
//! extremality tests and certificates ([`extremal`]), and first-eigenvalue
//! ascent ([`optimize`]).

pub mod assembly;
pub mod eigen;
pub mod extremal;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod linalg;
pub mod mobius;
pub mod optimize;
pub mod potentials;
pub mod sparse;

pub use assembly::{assemble, energy_density, integrate, DiscreteOperators};
pub use eigen::{cluster, rayleigh_quotient, solve_spectrum, EigenConfig, Spectrum};
pub use error::{Error, Result};
pub use extremal::{
    bubble_extract, first_variation, indefiniteness_test, recover_potential, sos_certificate,
    BubbleReport, ExtremalConfig, ExtremalityReport, SosCertificate, Verdict,
};
pub use geometry::{build_icosphere, build_torus, Lattice, SurfaceKind, SurfaceMesh};
pub use mobius::{energy_density_on_mesh, hersch_balance, sphere_upper_bound, MobiusMap};
pub use optimize::{ascent_direction, maximize_lambda1, AscentConfig, AscentFailure, AscentTrace};
pub use potentials::{
    concentration_family, mobius_extremal, project_zero_mean, weak_pairing, Potential,
};

/// `8 pi`, the first Laplace eigenvalue of the unit-area round sphere.
pub const EIGHT_PI: f64 = 8.0 * std::f64::consts::PI;
