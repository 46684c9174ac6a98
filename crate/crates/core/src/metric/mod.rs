//! Geometry of the solved metrics: Ricci lower bound, C^2 sandwich, cone lengths,
//! the shortcut comparison, graph diameters and convergence on compact sets.

mod convergence;
mod graph;
mod length;
mod ricci;
mod sandwich;

pub use convergence::{
    convergence_study, log_slope, strictly_decreasing, CompactSet, ConvergenceReport,
};
pub use graph::{graph_diameter, GraphNode, MetricGraph};
pub use length::{
    fit_envelope, radial_length, shortcut_test, ConformalMetric, LengthReport, ShortcutReport,
};
pub use ricci::{ricci_check, ricci_closed_form, ricci_direct, RicciReport, ORDER_BOUND};
pub use sandwich::{c2_sandwich, spread, Sandwich};

use crate::error::MetricError;
use crate::sphere::{Density, FieldKind, ScalarField, SphereGrid};

/// rho = 1 + lap phi, the density of omega_phi.
pub fn metric_density(grid: &SphereGrid, phi: &ScalarField) -> Result<Density, MetricError> {
    let rho = grid
        .laplacian(&phi.clone().with_kind(FieldKind::Smooth))
        .shift(1.0);
    if let Some(i) = rho.values.iter().position(|&r| !(r > 0.0)) {
        return Err(MetricError::NonPositive(i));
    }
    Ok(Density(rho))
}

/// Samples a rotationally symmetric conformal metric with its cone at z = 0 onto the grid.
pub fn conformal_density(grid: &SphereGrid, metric: ConformalMetric) -> Density {
    Density(grid.field(|i| metric.density(grid.z(i).norm())))
}

/// |v_{k+1} - v_k| for consecutive entries.
pub fn successive_differences(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
}
