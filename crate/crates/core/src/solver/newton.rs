use super::{SolveState, SolverConfig};
use crate::error::SolverError;
use crate::sphere::{gmres_rows, ScalarField, SphereGrid};

/// G = log(1 + lap phi) - h + t phi, with 1 + lap phi.
fn defect(
    grid: &SphereGrid,
    h: &ScalarField,
    t: f64,
    phi: &ScalarField,
) -> (ScalarField, ScalarField) {
    let rho = grid.laplacian(phi).shift(1.0);
    let g = ScalarField::smooth(
        rho.values
            .iter()
            .zip(&h.values)
            .zip(&phi.values)
            .map(|((r, hv), p)| r.ln() - hv + t * p)
            .collect(),
    );
    (g, rho)
}

/// sup |log(1 + lap phi) - h + t phi|
pub fn residual(grid: &SphereGrid, h: &ScalarField, t: f64, phi: &ScalarField) -> f64 {
    defect(grid, h, t, phi).0.max_abs()
}

fn merit(grid: &SphereGrid, g: &ScalarField) -> f64 {
    grid.sum_weighted(&g.values.iter().map(|v| v * v).collect::<Vec<_>>())
}

/// Newton direction: (lap_phi + t) v = -G, i.e. G v + 2 w t rho v = -2 w rho G.
fn direction(
    grid: &SphereGrid,
    t: f64,
    g: &ScalarField,
    rho: &ScalarField,
) -> Result<Vec<f64>, SolverError> {
    let n = grid.n_phi();
    let w = |i: usize| grid.row_weight(i / n);
    let mut f: Vec<f64> = rho
        .values
        .iter()
        .zip(&g.values)
        .map(|(r, gv)| -r * gv)
        .collect();
    if t == 0.0 {
        let mean = grid.sum_weighted(&f) / grid.volume();
        f.iter_mut().for_each(|v| *v -= mean);
        let rhs: Vec<f64> = f.iter().enumerate().map(|(i, v)| 2.0 * w(i) * v).collect();
        return grid
            .solve_rows(&vec![0.0; grid.n_u()], &rhs, true)
            .map_err(|reason| SolverError::Linear { t, reason });
    }
    let rhs: Vec<f64> = f.iter().enumerate().map(|(i, v)| 2.0 * w(i) * v).collect();
    let d: Vec<f64> = rho
        .values
        .iter()
        .enumerate()
        .map(|(i, r)| 2.0 * w(i) * t * r)
        .collect();
    gmres_rows(grid, &d, &rhs, 1e-12, 40, 400).map_err(|reason| SolverError::Linear { t, reason })
}

/// Damped Newton solve of 1 + lap phi = exp(h - t phi) from `init`.
///
/// At t = 0 the result is shifted to the gauge int phi omega_0 = 0.
pub fn newton_solve(
    grid: &SphereGrid,
    h: &ScalarField,
    t: f64,
    init: &ScalarField,
    cfg: &SolverConfig,
) -> Result<SolveState, SolverError> {
    let mut phi = init.clone().with_kind(crate::sphere::FieldKind::Smooth);
    let (mut g, mut rho) = defect(grid, h, t, &phi);
    let margin0 = rho.min();
    if !(margin0 > 0.0) {
        return Err(SolverError::NotAdmissible(margin0));
    }
    let mut res = g.max_abs();
    let mut history = vec![res];
    let mut iterations = 0;
    loop {
        if res <= cfg.target {
            break;
        }
        if iterations >= cfg.max_iter {
            if res <= cfg.tol {
                break;
            }
            return Err(SolverError::MaxIterations {
                t,
                iterations,
                residual: res,
            });
        }
        if iterations >= 2 && res <= cfg.tol && res > 0.5 * history[history.len() - 2] {
            // roundoff floor reached below the tolerance
            break;
        }
        let v = direction(grid, t, &g, &rho)?;
        let m0 = merit(grid, &g);
        let mut step = 1.0;
        let accepted = loop {
            let trial = ScalarField::smooth(
                phi.values
                    .iter()
                    .zip(&v)
                    .map(|(p, dv)| p + step * dv)
                    .collect(),
            );
            let (gt, rt) = defect(grid, h, t, &trial);
            if rt.min() > 0.0 && gt.all_finite() {
                let rt_res = gt.max_abs();
                if merit(grid, &gt) <= (1.0 - 1e-4 * step) * m0 || rt_res < res {
                    break Some((trial, gt, rt, rt_res));
                }
            }
            step *= 0.5;
            if step < cfg.min_step {
                break None;
            }
        };
        iterations += 1;
        match accepted {
            Some((p, gt, rt, r)) => {
                phi = p;
                g = gt;
                rho = rt;
                res = r;
                history.push(res);
            }
            None if res <= cfg.tol => break,
            None => return Err(SolverError::LineSearch { t }),
        }
    }
    if t == 0.0 {
        let mean = grid.sum_weighted(&phi.values) / grid.volume();
        phi = phi.shift(-mean);
        let (g0, r0) = defect(grid, h, t, &phi);
        g = g0;
        rho = r0;
        res = g.max_abs();
    }
    Ok(SolveState {
        t,
        delta: f64::NAN,
        margin: rho.min(),
        phi,
        residual: res,
        lambda1: None,
        iterations,
        history,
    })
}
