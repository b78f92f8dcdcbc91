//! Intrinsic volumes of random cubical complexes on the d-torus.
//!
//! * [`lattice`]: the torus of unit cubes and face combinatorics of its open cells.
//! * [`complex`]: voxel fields, cell sets, closure, and the `.cuvx`/`.cucx` formats.
//! * [`models`]: seeded generators for the voxel, closed-faces,
//!   independent-faces and plaquette models.
//! * [`measure`]: intrinsic volumes `mu_0..mu_d`, with a closed-cell oracle.
//! * [`poly`] and [`moments`]: exact mean and variance polynomials.
//! * [`analysis`]: certified roots of the expected Euler characteristic and
//!   critical points of the codimension-one variance.
//! * [`montecarlo`]: simulation, normality diagnostics and exhaustive
//!   symbolic verification.

mod bits;

pub mod analysis;
pub mod complex;
pub mod identities;
pub mod lattice;
pub mod measure;
pub mod models;
pub mod moments;
pub mod montecarlo;
pub mod poly;
