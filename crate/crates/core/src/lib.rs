//! Numerical lab for conic Kähler metrics on the Riemann sphere.
//!
//! Conventions: the background is the Fubini-Study form
//! `omega_0 = i d dbar log(1 + |z|^2)` with area `V = 2 pi` and Ricci density 2;
//! the complex Laplacian is fixed by `i d dbar f = (lap f) omega_0`.

pub mod energy;
pub mod error;
pub mod metric;
pub mod regularization;
pub mod solver;
pub mod sphere;

pub use error::{EnergyError, GridError, MetricError, RegularizationError, SolverError};
