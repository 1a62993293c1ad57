//! Numerics for the focusing mass-supercritical NLS / Gross-Pitaevskii equation
//!
//! ```text
//! i u_t = -1/2 Lap u + 1/2 V u - |u|^{p-1} u + L_Omega u,   V = sum_j gamma_j^2 x_j^2
//! ```
//!
//! with rotation about the third axis: free ground states, trap spectra, variational
//! ground states, Strang-split dynamics, and the blow-up / global-existence classifier.

pub mod classify;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod groundstate;
pub mod optim;
pub mod params;
pub mod qprofile;
pub mod random;
pub mod snapshot;
pub mod spectral;
pub mod spectrum;
pub mod stability;

pub use error::{Error, Result};
pub use field::{ComplexField, RealField};
pub use functionals::{evaluate, FunctionalReport};
pub use grid::{make_grid, Grid, GridSpec};
pub use params::PhysicsParams;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
