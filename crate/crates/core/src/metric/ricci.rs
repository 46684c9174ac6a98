use serde::Serialize;

use crate::error::MetricError;
use crate::regularization::RegularizedRhs;
use crate::solver::SolveState;
use crate::sphere::{FieldKind, ScalarField, SphereGrid};

/// Ric(omega_delta) - t omega_delta, computed from the discrete solution and from the
/// closed-form remainder. Both exclude the end rows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RicciReport {
    pub delta: f64,
    pub t: f64,
    pub n: usize,
    /// min density of the direct computation
    pub min_density: f64,
    pub min_closed_form: f64,
    /// sup |direct - closed form|
    pub discrepancy: f64,
    pub max_density: f64,
    pub tol_curv: f64,
}

impl RicciReport {
    pub fn bounded_below(&self) -> bool {
        self.min_density >= -self.tol_curv
    }
}

/// Discrepancies above this multiple of max density * N^-2 are treated as a conventions bug.
pub const ORDER_BOUND: f64 = 1000.0;

/// Density of Ric(omega_delta) - t omega_delta on every node: 2 - lap(h_delta - t phi) - t rho.
pub fn ricci_direct(
    grid: &SphereGrid,
    rhs: &RegularizedRhs,
    phi: &ScalarField,
    delta: f64,
    t: f64,
) -> Result<ScalarField, MetricError> {
    let h = rhs.h_delta(grid, delta)?;
    let phi = phi.clone().with_kind(FieldKind::Smooth);
    let rho = grid.laplacian(&phi).shift(1.0);
    let lap = grid.laplacian(&h.axpy(-t, &phi));
    Ok(lap.zip_map(&rho, |l, r| 2.0 - l - t * r))
}

/// (mu - t) + Omega + sum (1 - beta_i) [delta R_i / (delta + |S_i|^2) + delta |DS_i|^2 / (delta + |S_i|^2)^2]
pub fn ricci_closed_form(
    grid: &SphereGrid,
    rhs: &RegularizedRhs,
    delta: f64,
    t: f64,
) -> ScalarField {
    let mut out = rhs.twist.omega_density(grid).0.shift(rhs.mu() - t);
    for (i, cone) in grid.cones().cones.iter().enumerate() {
        let a = 1.0 - cone.beta;
        let r = grid.curvature_form(i).0;
        let ds = grid.ds_density(i);
        let s = &rhs.norms[i];
        for (idx, v) in out.values.iter_mut().enumerate() {
            let q = delta + s.values[idx];
            *v += a * (delta * r.values[idx] / q + delta * ds.values[idx] / (q * q));
        }
    }
    out
}

pub fn ricci_check(
    grid: &SphereGrid,
    rhs: &RegularizedRhs,
    state: &SolveState,
) -> Result<RicciReport, MetricError> {
    let (delta, t) = (state.delta, state.t);
    let direct = ricci_direct(grid, rhs, &state.phi, delta, t)?;
    let closed = ricci_closed_form(grid, rhs, delta, t);
    let mask = grid.interior_mask();
    let (mut min_d, mut min_c, mut disc, mut max_abs) =
        (f64::INFINITY, f64::INFINITY, 0.0f64, 0.0f64);
    for (i, &inside) in mask.iter().enumerate() {
        if !inside {
            continue;
        }
        let (d, c) = (direct.values[i], closed.values[i]);
        min_d = min_d.min(d);
        min_c = min_c.min(c);
        disc = disc.max((d - c).abs());
        max_abs = max_abs.max(c.abs());
    }
    let n = grid.n_phi();
    let scale = max_abs / (n * n) as f64;
    if !(disc <= ORDER_BOUND * scale) {
        return Err(MetricError::Discrepancy(disc, ORDER_BOUND * scale));
    }
    Ok(RicciReport {
        delta,
        t,
        n,
        min_density: min_d,
        min_closed_form: min_c,
        discrepancy: disc,
        max_density: max_abs,
        tol_curv: 10.0 * scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularization::TwistSpec;
    use crate::sphere::{ConeData, Harmonic};

    #[test]
    fn pure_twist_remainder_is_s() {
        let g = SphereGrid::build(32, ConeData::none(), 2.0).unwrap();
        let tw = TwistSpec::new(0.5, g.cones(), Harmonic::default()).unwrap();
        let rhs = RegularizedRhs::new(&g, &tw).unwrap();
        let r = ricci_closed_form(&g, &rhs, 0.1, 0.5);
        assert!(r.values.iter().all(|v| (v - 1.5).abs() < 1e-14));
    }
}
