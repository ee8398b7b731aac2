//! Large-time asymptotics of the Debye–Hückel drift-diffusion equation in ℝ³.
//!
//! ```text
//! ∂_t u - Δu = ∇·(u∇ψ),   -Δψ = u
//! ```
//!
//! The crate evaluates the terms of the asymptotic expansion of `u` (heat
//! kernel, dipole correction, the radial nonlinear profile and the
//! logarithmic correction) by adaptive quadrature, simulates the equation
//! pseudospectrally on a periodic box with a free-space Poisson solve, and
//! measures decay rates and expansion residuals on the simulated data.
//!
//! Module map:
//!
//! * [`kernel`]: heat kernel, derivatives, Coulomb potential and field.
//! * [`quadrature`]: adaptive Gauss–Kronrod with singular and tail maps.
//! * [`profiles`]: the expansion terms and constants.
//! * [`solver`]: spectral time stepping, Poisson fields, snapshots.
//! * [`analysis`]: moments, norms, decay fits, residual reports.
//! * [`config`]: the key/value run configuration and its hash.

pub mod analysis;
pub mod config;
pub mod error;
pub mod fft;
pub mod kernel;
pub mod profiles;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use kernel::{DerivativeIndex, PrefactorMode, SpaceTimePoint};
pub use quadrature::{QuadratureResult, QuadratureSpec, SingularityHint, TailHint};

/// Crate version, embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
