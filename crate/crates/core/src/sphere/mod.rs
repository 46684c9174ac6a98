//! Riemann sphere with the Fubini-Study background, quadrature, Laplacian and cone data.

mod cones;
mod document;
mod field;
mod grid;
mod poisson;

pub use cones::{Cone, ConeData, Harmonic, Point};
pub use document::{ChartBlock, FieldDocument, FIELD_SCHEMA};
pub use field::{Density, FieldKind, ScalarField};
pub use grid::{Chart, RefinementZone, SphereGrid, DEFAULT_DEPTH, DEFAULT_OVERLAP, MIN_RESOLUTION};
pub use poisson::{gmres_rows, solve_tridiagonal};
