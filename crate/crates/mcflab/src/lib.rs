//! A numerical laboratory for mean curvature flow on closed triangulated
//! surfaces in R^3.
//!
//! The crate evolves meshes under mean curvature flow (MCF) and rescaled
//! mean curvature flow (RMCF), and implements the diagnostic machinery used
//! to study finite-time singularities and self-shrinkers:
//!
//! - discrete geometry kernels (curvature, areas, intrinsic distances,
//!   ball clipping, reach, graph radii) in [`mesh`],
//! - MCF/RMCF time integration with remeshing and extinction fitting in
//!   [`flow`],
//! - Gaussian-weighted functionals (F-functional, entropy, shrinker
//!   residuals, Gaussian densities, energy bounds) in [`shrinker`],
//! - the high-curvature / thick / thin decomposition of a ball and the
//!   doubling time-slice selector in [`decomposition`],
//! - multiplicity and sheet analysis over a reference shrinker in
//!   [`sheets`],
//! - the Gaussian-weighted stability quadratic form, Rayleigh-quotient
//!   minimisation and logarithmic cutoffs in [`stability`],
//! - heat-kernel parametrices, singular potentials along Lipschitz curves,
//!   capacity functionals and singular-measure recovery in [`kernel`],
//! - parabolic Harnack-inequality harnesses in [`harnack`].
//!
//! The `examples/` directory contains one runnable example per major
//! capability; `src/bin/mcflab.rs` is a thin command-line front end.

pub mod decomposition;
pub mod error;
pub mod flow;
pub mod harnack;
pub mod kernel;
pub mod mesh;
pub mod report;
pub mod sheets;
pub mod shrinker;
pub mod stability;
pub mod verify;

pub use error::{Error, Result};
pub use mesh::TriMesh;
