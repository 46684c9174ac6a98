use serde::Serialize;

use crate::error::MetricError;
use crate::sphere::{FieldKind, ScalarField, SphereGrid};

/// Compact set {r_lo <= |z| <= r_hi}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CompactSet {
    pub r_lo: f64,
    pub r_hi: f64,
}

impl Default for CompactSet {
    fn default() -> Self {
        CompactSet {
            r_lo: 0.5,
            r_hi: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub k: CompactSet,
    /// min over K and the cones of |S|^2 (squared chordal half-distance)
    pub min_cone_distance: f64,
    pub deltas: Vec<f64>,
    /// sup_K |phi_delta - phi_ref|
    pub sup_diff: Vec<f64>,
    /// sup_K of first difference quotients of phi_delta - phi_ref
    pub grad_diff: Vec<f64>,
    /// sup_K |lap (phi_delta - phi_ref)|
    pub lap_diff: Vec<f64>,
    /// slope of log sup_diff against log delta
    pub rate: Option<f64>,
    pub monotone: bool,
}

pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Least-squares slope of log y against log x; None if any value is not positive.
pub fn log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Compares each phi_delta with phi_ref on K. States are (delta, phi) in sweep order.
pub fn convergence_study(
    grid: &SphereGrid,
    states: &[(f64, &ScalarField)],
    phi_ref: &ScalarField,
    k: CompactSet,
) -> Result<ConvergenceReport, MetricError> {
    let mask = grid.annulus_mask(k.r_lo, k.r_hi);
    let min_cone_distance = (0..grid.cones().len())
        .flat_map(|c| {
            let mask = &mask;
            (0..grid.len())
                .filter(move |&i| mask[i])
                .map(move |i| grid.section_norm_sq_at(c, i))
        })
        .fold(f64::INFINITY, f64::min);
    let (n, h) = (grid.n_phi(), grid.h());
    let mut sup_diff = Vec::new();
    let mut grad_diff = Vec::new();
    let mut lap_diff = Vec::new();
    for &(_, phi) in states {
        let d = phi.sub(phi_ref).with_kind(FieldKind::Smooth);
        let lap = grid.laplacian(&d);
        let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
        for i in (0..grid.len()).filter(|&i| mask[i]) {
            let (j, kk) = (grid.row_of(i), grid.col_of(i));
            s0 = s0.max(d.values[i].abs());
            let right = grid.index(j, (kk + 1) % n);
            s1 = s1.max((d.values[right] - d.values[i]).abs() / h);
            if j + 1 < grid.n_u() {
                s1 = s1.max((d.values[i + n] - d.values[i]).abs() / h);
            }
            s2 = s2.max(lap.values[i].abs());
        }
        sup_diff.push(s0);
        grad_diff.push(s1);
        lap_diff.push(s2);
    }
    let deltas: Vec<f64> = states.iter().map(|s| s.0).collect();
    Ok(ConvergenceReport {
        k,
        min_cone_distance,
        rate: log_slope(&deltas, &sup_diff),
        monotone: strictly_decreasing(&sup_diff),
        deltas,
        sup_diff,
        grad_diff,
        lap_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [1e-1, 1e-2, 1e-3];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(0.5)).collect();
        assert!((log_slope(&x, &y).unwrap() - 0.5).abs() < 1e-12);
        assert!(log_slope(&x, &[1.0, 0.0, 1.0]).is_none());
    }
}
