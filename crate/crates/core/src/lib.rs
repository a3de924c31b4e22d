//! Simulation and verification toolkit for perturbed sweeping processes
//!
//! ```text
//! −ẋ ∈ N(C(t), x) + f(t, x)
//! ```
//!
//! with prox-regular (possibly nonconvex) moving constraint sets.
//!
//! * [`sets`]: constraint geometry, projections, proximal normals.
//! * [`sweep`]: vector fields and the catching-up integrator.
//! * [`analysis`]: constant estimators, the stability certificate,
//!   Hausdorff and curvature tools, contraction checks.
//! * [`periodic`]: period-map fixed points and pullback approximation of
//!   the global solution.
//! * [`scenarios`]: ready-made configurations and the run dispatcher.
//! * [`cli`]: the `proxsweep` command line.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod periodic;
pub mod rng;
pub mod scenarios;
pub mod sets;
pub mod state;
pub mod sweep;

pub use error::{Error, Result};
pub use state::StateVector;
