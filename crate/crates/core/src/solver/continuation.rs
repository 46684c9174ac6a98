use super::{estimate_lambda1, newton_solve, SolveState, SolverConfig};
use crate::error::SolverError;
use crate::regularization::RegularizedRhs;
use crate::sphere::{ScalarField, SphereGrid};

fn accept(
    grid: &SphereGrid,
    mut state: SolveState,
    delta: f64,
    cfg: &SolverConfig,
) -> Result<SolveState, SolverError> {
    state.delta = delta;
    if cfg.lambda_check {
        let l = estimate_lambda1(grid, &state.phi)?;
        state.lambda1 = Some(l);
        if l <= state.t {
            return Err(SolverError::Guard {
                t: state.t,
                lambda1: l,
            });
        }
    }
    Ok(state)
}

/// Continuity path from the Calabi-Yau endpoint t = 0 to t = mu at fixed delta.
///
/// Uniform steps of mu / t_steps, warm-started; a failed step is halved and the
/// nominal step is restored after each success.
pub fn continuity_run(
    grid: &SphereGrid,
    rhs: &RegularizedRhs,
    delta: f64,
    cfg: &SolverConfig,
) -> Result<Vec<SolveState>, SolverError> {
    if !(delta > 0.0) {
        return Err(SolverError::BadDelta(delta));
    }
    let h = rhs.h_delta(grid, delta)?;
    let mu = rhs.mu();
    let first = newton_solve(grid, &h, 0.0, &ScalarField::zeros(grid.len()), cfg)?;
    let mut states = vec![accept(grid, first, delta, cfg)?];
    if mu == 0.0 {
        return Ok(states);
    }
    let nominal = mu / cfg.t_steps as f64;
    let mut step = nominal;
    let mut halvings = 0;
    let mut k = 0usize;
    loop {
        let last = states.last().unwrap();
        let t0 = last.t;
        if t0 == mu {
            break;
        }
        // lattice points k * mu / t_steps are always visited
        let target = if k + 1 >= cfg.t_steps {
            mu
        } else {
            (k + 1) as f64 * nominal
        };
        let t1 = if (target - t0).abs() <= step.abs() * (1.0 + 1e-12) {
            target
        } else {
            t0 + step
        };
        match newton_solve(grid, &h, t1, &last.phi, cfg).and_then(|s| accept(grid, s, delta, cfg)) {
            Ok(s) => {
                states.push(s);
                if t1 == target {
                    k += 1;
                    step = nominal;
                } else {
                    step = if (2.0 * step).abs() >= nominal.abs() {
                        nominal
                    } else {
                        2.0 * step
                    };
                }
            }
            Err(SolverError::Guard { t, lambda1 }) => {
                return Err(SolverError::Guard { t, lambda1 })
            }
            Err(_) => {
                halvings += 1;
                if halvings > cfg.max_halvings {
                    return Err(SolverError::StepUnderflow { last_t: t0 });
                }
                step *= 0.5;
            }
        }
    }
    Ok(states)
}
