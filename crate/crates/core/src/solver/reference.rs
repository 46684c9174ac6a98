use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use super::{continuity_run, newton_solve, SolveState, SolverConfig};
use crate::error::SolverError;
use crate::regularization::RegularizedRhs;
use crate::sphere::{ScalarField, SphereGrid};

/// Squared chordal half-distance from the cones defining the compact set for extrapolation.
pub const REFERENCE_AWAY: f64 = 0.05;

/// Conic reference potential and how it was obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum Reference {
    /// Exact football potential.
    ClosedForm(ScalarField),
    /// No cones: the smooth solution itself.
    Smooth(ScalarField),
    /// Extrapolation in delta, valid where `mask` holds.
    Extrapolated {
        phi: ScalarField,
        mask: Vec<bool>,
        differences: Vec<f64>,
    },
}

impl Reference {
    pub fn phi(&self) -> &ScalarField {
        match self {
            Reference::ClosedForm(p) | Reference::Smooth(p) => p,
            Reference::Extrapolated { phi, .. } => phi,
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// c = -log B(beta, beta), the normalizing constant of the football right-hand side.
pub fn football_c(beta: f64) -> f64 {
    -(2.0 * ln_gamma(beta) - ln_gamma(2.0 * beta))
}

/// phi = (2/mu) log(1 + |z|^(2 beta)) - log(1 + |z|^2) + (c - log beta)/mu, mu = 2 beta.
///
/// omega_0 + i d dbar phi is the pullback of the round metric under z -> z^beta.
pub fn football_potential(grid: &SphereGrid, beta: f64) -> ScalarField {
    let mu = 2.0 * beta;
    let c = football_c(beta);
    grid.field_u(|u| {
        (2.0 / mu) * softplus(2.0 * beta * u) - softplus(2.0 * u) + (c - beta.ln()) / mu
    })
}

/// Density of the football metric relative to omega_0.
pub fn football_density(grid: &SphereGrid, beta: f64) -> ScalarField {
    grid.field_u(|u| football_density_at(u, beta))
}

pub(crate) fn football_density_at(u: f64, beta: f64) -> f64 {
    // beta r^(2b-2) (1+r^2)^2 / (1+r^(2b))^2 written in log form
    let l = beta.ln() + (2.0 * beta - 2.0) * u + 2.0 * softplus(2.0 * u)
        - 2.0 * softplus(2.0 * beta * u);
    l.exp()
}

fn basis(delta: f64, beta: f64, k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => delta.powf(beta),
        _ => delta.powf(beta) * delta.ln(),
    }
}

/// Least-squares extrapolation to delta = 0 in the basis {1, delta^beta, delta^beta log delta}.
///
/// `finals` are (delta, phi_delta) with delta decreasing. Returns the extrapolated field
/// (the smallest-delta field outside `mask`) and the successive sup differences on `mask`.
pub fn extrapolate(
    finals: &[(f64, &ScalarField)],
    beta: f64,
    mask: &[bool],
) -> Result<(ScalarField, Vec<f64>), SolverError> {
    let m = finals.len();
    assert!(m > 0, "no states to extrapolate");
    let differences: Vec<f64> = finals
        .windows(2)
        .map(|w| {
            w[0].1
                .values
                .iter()
                .zip(&w[1].1.values)
                .zip(mask)
                .filter(|(_, &k)| k)
                .fold(0.0f64, |acc, ((a, b), _)| acc.max((a - b).abs()))
        })
        .collect();
    if differences.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SolverError::NotCauchy(differences));
    }
    let nb = m.min(3);
    // coefficients a with extrapolated value = sum_k a_k phi_k
    let mut ata = vec![vec![0.0; nb]; nb];
    for &(d, _) in finals {
        for p in 0..nb {
            for q in 0..nb {
                ata[p][q] += basis(d, beta, p) * basis(d, beta, q);
            }
        }
    }
    let e0: Vec<f64> = (0..nb).map(|p| if p == 0 { 1.0 } else { 0.0 }).collect();
    let g = solve_small(ata, e0).ok_or_else(|| SolverError::NotCauchy(differences.clone()))?;
    let weights: Vec<f64> = finals
        .iter()
        .map(|&(d, _)| (0..nb).map(|p| g[p] * basis(d, beta, p)).sum())
        .collect();
    let last = finals[m - 1].1;
    let values = (0..last.len())
        .map(|i| {
            if mask[i] {
                finals
                    .iter()
                    .zip(&weights)
                    .map(|((_, f), w)| w * f.values[i])
                    .sum()
            } else {
                last.values[i]
            }
        })
        .collect();
    Ok((ScalarField::smooth(values), differences))
}

fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c] == 0.0 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Whether the configuration is the football: two equal cones at 0 and infinity, no twist form.
pub fn is_football(grid: &SphereGrid, rhs: &RegularizedRhs) -> bool {
    let t = &rhs.twist;
    grid.cones().is_football() && t.s == 0.0 && t.chi.is_zero()
}

/// Extrapolates the final (t = mu) states of a delta sweep.
pub fn extrapolate_states(
    grid: &SphereGrid,
    finals: &[SolveState],
) -> Result<Reference, SolverError> {
    let beta = grid.cones().min_beta().unwrap_or(1.0);
    let mask = grid.away_from_cones(REFERENCE_AWAY);
    let pairs: Vec<(f64, &ScalarField)> = finals.iter().map(|s| (s.delta, &s.phi)).collect();
    let (phi, differences) = extrapolate(&pairs, beta, &mask)?;
    Ok(Reference::Extrapolated {
        phi,
        mask,
        differences,
    })
}

/// Approximation of the conic solution: closed form for the football, the smooth solve
/// without cones, otherwise extrapolation of the delta sweep.
pub fn solve_conic_reference(
    grid: &SphereGrid,
    rhs: &RegularizedRhs,
    cfg: &SolverConfig,
) -> Result<Reference, SolverError> {
    if is_football(grid, rhs) {
        return Ok(Reference::ClosedForm(football_potential(
            grid,
            grid.cones().cones[0].beta,
        )));
    }
    if !rhs.has_cones() {
        let h = rhs.h_delta(grid, 1.0)?;
        let path = continuity_run(grid, rhs, 1.0, cfg)?;
        let last = path.last().unwrap();
        let s = newton_solve(grid, &h, last.t, &last.phi, cfg)?;
        return Ok(Reference::Smooth(s.phi));
    }
    let finals: Vec<Result<SolveState, SolverError>> = cfg
        .deltas
        .par_iter()
        .map(|&d| continuity_run(grid, rhs, d, cfg).map(|p| p.into_iter().last().unwrap()))
        .collect();
    let finals: Vec<SolveState> = finals.into_iter().collect::<Result<_, _>>()?;
    extrapolate_states(grid, &finals)
}
