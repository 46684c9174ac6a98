//! Damped Newton for 1 + lap phi = exp(h_delta - t phi), continuation in t, the
//! eigenvalue guard, and the conic reference potential.

mod continuation;
mod eigen;
mod newton;
mod reference;

pub use continuation::continuity_run;
pub use eigen::estimate_lambda1;
pub use newton::{newton_solve, residual};
pub use reference::{
    extrapolate, extrapolate_states, football_c, football_density, football_potential, is_football,
    solve_conic_reference, Reference, REFERENCE_AWAY,
};

use crate::sphere::ScalarField;

/// Gauge rule fixing the kernel constant at t = 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    /// int phi omega_0 = 0
    MeanZero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Sup-norm residual accepted at every state.
    pub tol: f64,
    /// Newton keeps iterating until this residual unless it stagnates below `tol`.
    pub target: f64,
    pub max_iter: usize,
    /// Smallest line-search step before a Newton step is declared failed.
    pub min_step: f64,
    pub t_steps: usize,
    pub max_halvings: usize,
    pub deltas: Vec<f64>,
    pub lambda_check: bool,
    pub gauge: Gauge,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-9,
            target: 1e-11,
            max_iter: 50,
            min_step: 1.0 / 1024.0 / 1024.0,
            t_steps: 64,
            max_halvings: 12,
            deltas: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
            lambda_check: true,
            gauge: Gauge::MeanZero,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tol > 0.0) || !(self.target > 0.0) {
            return Err("tolerance must be positive".into());
        }
        if self.t_steps == 0 {
            return Err("t_steps must be at least 1".into());
        }
        if self.deltas.iter().any(|&d| !(d > 0.0)) {
            return Err("delta list must be positive".into());
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err("delta list must be strictly decreasing".into());
        }
        Ok(())
    }
}

/// One accepted node of the continuity path.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveState {
    pub t: f64,
    pub delta: f64,
    pub phi: ScalarField,
    pub residual: f64,
    pub lambda1: Option<f64>,
    pub iterations: usize,
    /// min(1 + lap phi)
    pub margin: f64,
    /// Sup residual before each Newton step and after the last.
    pub history: Vec<f64>,
}
