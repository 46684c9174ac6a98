use serde::Serialize;

use crate::error::MetricError;
use crate::regularization::RegularizedRhs;
use crate::sphere::{Density, SphereGrid};

/// Smallest C1, C2 with C1 <= rho <= C2 / prod (delta + |S_i|^2)^(1 - beta_i) on all nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sandwich {
    pub delta: f64,
    pub c1: f64,
    pub c2: f64,
    /// node and |u| of the node attaining C2
    pub argmax: usize,
    pub argmax_u: f64,
}

pub fn c2_sandwich(
    grid: &SphereGrid,
    rhs: &RegularizedRhs,
    rho: &Density,
    delta: f64,
) -> Result<Sandwich, MetricError> {
    let betas: Vec<f64> = grid.cones().cones.iter().map(|c| c.beta).collect();
    let mut c1 = f64::INFINITY;
    let (mut c2, mut argmax) = (f64::NEG_INFINITY, 0);
    for (i, &r) in rho.0.values.iter().enumerate() {
        if !(r > 0.0) {
            return Err(MetricError::NonPositive(i));
        }
        c1 = c1.min(r);
        let w: f64 = rhs
            .norms
            .iter()
            .zip(&betas)
            .map(|(s, b)| (delta + s.values[i]).powf(1.0 - b))
            .product();
        if r * w > c2 {
            c2 = r * w;
            argmax = i;
        }
    }
    Ok(Sandwich {
        delta,
        c1,
        c2,
        argmax,
        argmax_u: grid.u(grid.row_of(argmax)).abs(),
    })
}

/// max / min of a positive sequence.
pub fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    hi / lo
}
