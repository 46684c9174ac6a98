//! The verify check list. Tolerances are fixed here.

use conic_ma::energy::{
    approximation_slack, cocycle_defect, first_variation_j, gauge_defect, interpolation_slack,
    jensen_gap, mabuchi_ding_bound, minimizer_check, path_identity, scaling_check, EnergyContext,
    PotentialFamily,
};
use conic_ma::metric::{
    fit_envelope, ricci_check, spread, strictly_decreasing, successive_differences,
};
use conic_ma::regularization::RegularizedRhs;
use conic_ma::solver::{estimate_lambda1, SolveState};
use conic_ma::sphere::{ScalarField, SphereGrid};
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts::Check;
use crate::pipeline::{run_paths, Analysis, Geodesics, Lab, LabError, Sweep};

pub const RESIDUAL_TOL: f64 = 1e-9;
pub const NORMALIZATION_TOL: f64 = 1e-8;
pub const VOLUME_TOL: f64 = 1e-10;
pub const QUADRATURE_TOL: f64 = 1e-4;
pub const I2J_TOL: f64 = 1e-8;
pub const COCYCLE_TOL: f64 = 1e-6;
pub const GAUGE_TOL: f64 = 1e-8;
pub const FIRST_VARIATION_TOL: f64 = 1e-4;
pub const SCALING_TOL: f64 = 1e-8;
pub const INEQUALITY_TOL: f64 = 1e-6;
pub const PATH_TOL: f64 = 1e-4;
/// Ratio of errors expected from a second-order method when the resolution doubles.
pub const ORDER_RATIO: f64 = 3.0;
/// Below this the compared errors are at roundoff and the order ratio is not meaningful.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;
/// Relative slack of L <= C r0^beta / beta; C is fit as a max, so its defining sample sits at 0.
pub const ENVELOPE_TOL: f64 = 1e-12;
pub const SANDWICH_SPREAD: f64 = 2.0;
pub const RADIAL_TOL: f64 = 0.01;
pub const DIAMETER_TOL: f64 = 0.03;
pub const REFERENCE_TOL: f64 = 1e-3;
pub const LAMBDA_TOL: f64 = 1e-2;

/// Data of the refinement checks: the N/2 grid and doubled t-steps.
#[derive(Clone, Debug, Serialize)]
pub struct OrderData {
    /// (delta, discrepancy at N/2, discrepancy at N)
    pub ricci: Vec<(f64, f64, f64)>,
    /// (delta, path error with t_steps, with 2 t_steps)
    pub path: Option<(f64, f64, f64)>,
}

/// Order check on (coarse, fine) error pairs. When every error is at roundoff the ratio
/// carries no information and the check bounds the errors instead.
fn order_check(name: &str, pairs: &[(f64, f64)], detail: String) -> Check {
    let worst = pairs
        .iter()
        .map(|&(c, f)| c.abs().max(f.abs()))
        .fold(0.0, f64::max);
    if worst <= ROUNDOFF_FLOOR {
        return Check::at_most(
            name,
            worst,
            ROUNDOFF_FLOOR,
            format!("errors at roundoff; {detail}"),
        );
    }
    let r = pairs
        .iter()
        .filter(|&&(c, f)| c.abs().max(f.abs()) > ROUNDOFF_FLOOR)
        .map(|&(c, f)| c.abs() / f.abs())
        .fold(f64::INFINITY, f64::min);
    Check::at_least(name, r, ORDER_RATIO, detail)
}

fn path_error(ctx: &EnergyContext, path: &[SolveState]) -> Result<f64, LabError> {
    let pts = path_identity(ctx, path)?;
    let last = pts.last().expect("nonempty path");
    Ok(last.lhs - last.rhs)
}

/// Re-solves the sweep on the N/2 grid and the smallest delta with doubled t-steps.
pub fn order_data(lab: &Lab, sweep: &Sweep) -> Result<OrderData, LabError> {
    let coarse_cfg = {
        let mut c = lab.cfg.clone();
        c.geometry.n /= 2;
        c
    };
    let coarse = coarse_cfg.grid()?;
    let twist = lab.cfg.twist_spec()?;
    let coarse_rhs = RegularizedRhs::new(&coarse, &twist)
        .map_err(|e| LabError::Config(crate::config::ConfigError::Invalid(e.to_string())))?;
    let coarse_sweep = run_paths(&coarse, &coarse_rhs, &sweep.deltas, &lab.cfg.solver)?;
    let mut ricci = Vec::new();
    for (fine, c) in sweep.finals().iter().zip(coarse_sweep.finals()) {
        let a = ricci_check(&coarse, &coarse_rhs, c)?;
        let b = ricci_check(&lab.grid, &lab.rhs, fine)?;
        ricci.push((fine.delta, a.discrepancy, b.discrepancy));
    }
    let path = if lab.mu() > 0.0 {
        let delta = *sweep.deltas.last().expect("nonempty sweep");
        let mut doubled = lab.cfg.solver.clone();
        doubled.t_steps *= 2;
        let fine_path = run_paths(&lab.grid, &lab.rhs, &[delta], &doubled)?;
        let ctx = EnergyContext::new(&lab.grid, &lab.rhs);
        let e1 = path_error(&ctx, sweep.paths.last().expect("nonempty sweep"))?;
        let e2 = path_error(&ctx, &fine_path.paths[0])?;
        Some((delta, e1, e2))
    } else {
        None
    };
    Ok(OrderData { ricci, path })
}

fn sweep_deltas(pd: &[crate::pipeline::DeltaMetrics]) -> Vec<f64> {
    pd.iter().map(|m| m.delta).collect()
}

/// Indices of a subsequence whose deltas shrink by a factor of 10 per step. Increments of
/// slowly converging quantities are only comparable over equal steps in log delta.
pub fn decade_subsequence(deltas: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut next = f64::INFINITY;
    for (i, &d) in deltas.iter().enumerate() {
        if d <= next * (1.0 + 1e-9) {
            out.push(i);
            next = d / 10.0;
        }
    }
    out
}

pub fn solver_checks(lab: &Lab, sweep: &Sweep) -> Vec<Check> {
    let states: Vec<&SolveState> = sweep.paths.iter().flatten().collect();
    let max_res = states.iter().map(|s| s.residual).fold(0.0, f64::max);
    let guard = states
        .iter()
        .filter_map(|s| s.lambda1.map(|l| l - s.t))
        .fold(f64::INFINITY, f64::min);
    let reached = sweep
        .finals()
        .iter()
        .map(|s| (s.t - lab.mu()).abs())
        .fold(0.0, f64::max);
    let mut out = vec![
        Check::at_most(
            "path_residual",
            max_res,
            RESIDUAL_TOL,
            format!("sup residual over {} accepted states", states.len()),
        ),
        Check::at_most(
            "path_reaches_mu",
            reached,
            1e-12,
            "every delta path ends at t = mu",
        ),
    ];
    if lab.cfg.solver.lambda_check {
        out.push(Check::at_least(
            "lambda_guard",
            guard,
            f64::MIN_POSITIVE,
            "min over states of lambda_1 - t",
        ));
    }
    let lam = estimate_lambda1(&lab.grid, &ScalarField::zeros(lab.grid.len()))
        .map(|l| (l - 2.0).abs())
        .unwrap_or(f64::INFINITY);
    out.push(Check::at_most(
        "background_lambda1",
        lam,
        LAMBDA_TOL,
        "|lambda_1(omega_0) - 2|",
    ));
    out
}

pub fn analysis_checks(lab: &Lab, analysis: &Analysis, order: Option<&OrderData>) -> Vec<Check> {
    let pd = &analysis.per_delta;
    let cones = lab.rhs.has_cones();
    let mut out = Vec::new();
    let norm = pd
        .iter()
        .map(|m| m.normalization_defect.abs())
        .fold(0.0, f64::max);
    out.push(Check::at_most(
        "normalization",
        norm,
        NORMALIZATION_TOL,
        "max over delta of |int (e^h_delta - 1) omega_0|",
    ));
    let gaps: Vec<f64> = pd.iter().map(|m| m.c_gap).collect();
    let gap_ok = if cones {
        strictly_decreasing(&gaps)
    } else {
        gaps.iter().all(|&g| g <= ROUNDOFF_FLOOR)
    };
    out.push(Check::at_least(
        "c_delta_monotone",
        gap_ok as u8 as f64,
        1.0,
        format!("|c_delta - c| = {gaps:?}"),
    ));
    let vh = lab.grid.volume();
    let vol = pd.iter().map(|m| (m.volume - vh).abs()).fold(0.0, f64::max);
    out.push(Check::at_most(
        "volume_conservation",
        vol / vh,
        VOLUME_TOL,
        "max over delta of |int omega_delta - int omega_0| / int omega_0",
    ));
    let two_pi = 2.0 * std::f64::consts::PI;
    out.push(Check::at_most(
        "background_volume",
        (vh - two_pi).abs() / two_pi,
        QUADRATURE_TOL,
        "discrete area of omega_0 against 2 pi",
    ));

    let ricci_slack = pd
        .iter()
        .map(|m| {
            m.ricci
                .as_ref()
                .map(|r| r.min_density + r.tol_curv)
                .unwrap_or(f64::NEG_INFINITY)
        })
        .fold(f64::INFINITY, f64::min);
    let errors: Vec<&String> = pd.iter().filter_map(|m| m.ricci_error.as_ref()).collect();
    out.push(Check::at_least(
        "ricci_lower_bound",
        ricci_slack,
        0.0,
        if errors.is_empty() {
            "min over delta of (min remainder density + tol_curv)".to_string()
        } else {
            format!("{errors:?}")
        },
    ));
    if let Some(o) = order {
        let pairs: Vec<(f64, f64)> = o.ricci.iter().map(|&(_, c, f)| (c, f)).collect();
        out.push(order_check(
            "ricci_order",
            &pairs,
            format!("discrepancy at N/2 and at N per delta: {:?}", o.ricci),
        ));
        if let Some((d, e1, e2)) = o.path {
            out.push(order_check(
                "path_identity_order",
                &[(e1, e2)],
                format!("delta = {d}: error {e1:e} with t_steps, {e2:e} with 2 t_steps"),
            ));
        }
    }

    let c1: Vec<f64> = pd.iter().map(|m| m.sandwich.c1).collect();
    let c2: Vec<f64> = pd.iter().map(|m| m.sandwich.c2).collect();
    out.push(Check::at_least(
        "sandwich_positive",
        c1.iter().cloned().fold(f64::INFINITY, f64::min),
        f64::MIN_POSITIVE,
        "min over delta of C1",
    ));
    out.push(Check::at_most(
        "sandwich_stable",
        spread(&c1).max(spread(&c2)),
        SANDWICH_SPREAD,
        format!("C1 = {c1:?}, C2 = {c2:?}"),
    ));

    let conv = &analysis.convergence;
    if cones {
        out.push(Check::at_least(
            "convergence_monotone",
            conv.monotone as u8 as f64,
            1.0,
            format!("sup_K |phi_delta - phi_ref| = {:?}", conv.sup_diff),
        ));
        out.push(Check::at_least(
            "convergence_rate",
            conv.rate.unwrap_or(f64::NEG_INFINITY),
            f64::MIN_POSITIVE,
            format!("reference: {}", analysis.reference_info.kind),
        ));
        let diam: Vec<f64> = pd.iter().map(|m| m.diameter).collect();
        let idx = decade_subsequence(&sweep_deltas(pd));
        let sub: Vec<f64> = idx.iter().map(|&i| diam[i]).collect();
        let d = successive_differences(&sub);
        out.push(Check::at_least(
            "diameter_cauchy",
            (d.len() >= 2 && strictly_decreasing(&d)) as u8 as f64,
            1.0,
            format!("diameters {diam:?}; differences over the decade subsequence {idx:?}: {d:?}"),
        ));
    } else {
        let sup = conv.sup_diff.iter().cloned().fold(0.0, f64::max);
        out.push(Check::at_most(
            "convergence_trivial",
            sup,
            ROUNDOFF_FLOOR,
            "without cones delta enters nothing",
        ));
        let diam: Vec<f64> = pd.iter().map(|m| m.diameter).collect();
        let d = successive_differences(&diam)
            .into_iter()
            .fold(0.0, f64::max);
        out.push(Check::at_most(
            "diameter_cauchy",
            d,
            ROUNDOFF_FLOOR,
            format!("diameters {diam:?}"),
        ));
    }

    // radial lengths grow as delta decreases and stay under the fitted envelope
    let mut growth: f64 = f64::NEG_INFINITY;
    let mut envelope_excess: f64 = f64::NEG_INFINITY;
    let mut envelope_detail = Vec::new();
    if let Some(last) = pd.last() {
        let mut keys: Vec<(usize, f64)> = last.radial.iter().map(|r| (r.cone, r.beta)).collect();
        keys.dedup();
        for (cone, beta) in keys {
            let samples: Vec<(f64, f64)> = last
                .radial
                .iter()
                .filter(|r| r.cone == cone)
                .map(|r| (r.r0, r.length))
                .collect();
            let c = fit_envelope(&samples, beta);
            envelope_detail.push((cone, c));
            for m in pd {
                for r in m.radial.iter().filter(|r| r.cone == cone) {
                    envelope_excess =
                        envelope_excess.max(r.length * beta / (c * r.r0.powf(beta)) - 1.0);
                }
            }
            for w in pd.windows(2) {
                for (a, b) in w[0]
                    .radial
                    .iter()
                    .zip(&w[1].radial)
                    .filter(|(a, _)| a.cone == cone)
                {
                    growth = growth.max(a.length - b.length);
                }
            }
        }
    }
    if envelope_excess.is_finite() {
        out.push(Check::at_most(
            "length_monotone",
            growth,
            0.0,
            "max over radii of L(delta_k) - L(delta_k+1)",
        ));
        out.push(Check::at_most(
            "length_envelope",
            envelope_excess,
            ENVELOPE_TOL,
            format!("fitted C per cone (cone, C): {envelope_detail:?}"),
        ));
    }

    if let Some(err) = analysis.reference_info.extrapolation_error {
        let c = Check::at_most(
            "extrapolation_matches_closed_form",
            err,
            REFERENCE_TOL,
            format!(
                "sup over {} <= |z| <= {}",
                lab.cfg.experiment.compact.r_lo, lab.cfg.experiment.compact.r_hi
            ),
        );
        out.push(if lab.cfg.experiment.strict_reference {
            c
        } else {
            c.informational()
        });
    }
    out
}

pub fn geodesic_checks(geo: &Geodesics) -> Vec<Check> {
    let mut out = Vec::new();
    let bg = std::f64::consts::PI / 2f64.sqrt();
    out.push(Check::at_most(
        "background_diameter",
        (geo.background_diameter - bg).abs() / bg,
        DIAMETER_TOL,
        format!(
            "graph diameter {} against pi / sqrt 2",
            geo.background_diameter
        ),
    ));
    let slack = geo
        .shortcuts
        .iter()
        .map(|s| s.through - s.around)
        .fold(f64::INFINITY, f64::min);
    out.push(Check::at_least(
        "shortcut",
        slack,
        f64::MIN_POSITIVE,
        "min over beta, eps and metric of through - around",
    ));
    if let Some(f) = &geo.football {
        let rad = f
            .radial
            .iter()
            .map(|&(_, l, o)| (l - o).abs() / o)
            .fold(0.0, f64::max);
        out.push(Check::at_most(
            "football_radial_length",
            rad,
            RADIAL_TOL,
            "relative error of the exact-metric radial length",
        ));
        out.push(Check::at_most(
            "football_diameter",
            (f.diameter - f.diameter_oracle).abs() / f.diameter_oracle,
            DIAMETER_TOL,
            format!(
                "graph diameter {} against {}",
                f.diameter, f.diameter_oracle
            ),
        ));
        let g = f
            .graph_shortcut
            .iter()
            .filter(|&&(eps, _, _)| eps <= 0.1)
            .map(|&(_, d, through)| through - d)
            .fold(f64::INFINITY, f64::min);
        if g.is_finite() {
            out.push(Check::at_least(
                "football_graph_shortcut",
                g,
                f64::MIN_POSITIVE,
                "through length minus graph distance between eps and -eps",
            ));
        }
    }
    out
}

pub fn energy_checks(
    lab: &Lab,
    sweep: &Sweep,
    family: &PotentialFamily,
    phi_ref: &ScalarField,
    i_over_j_defect: f64,
) -> Result<Vec<Check>, LabError> {
    let ctx = EnergyContext::new(&lab.grid, &lab.rhs);
    let mu = lab.mu();
    let m = &family.members;
    let k = lab.cfg.experiment.samples.min(m.len() - 1);
    let mut out = vec![Check::at_most(
        "i_equals_2j",
        i_over_j_defect / 2.0,
        I2J_TOL,
        format!("max |I / (2 J) - 1| over {} potentials", m.len()),
    )];

    let mut cocycle: f64 = 0.0;
    let mut gauge: f64 = 0.0;
    let mut first_var: f64 = 0.0;
    let mut scaling: f64 = 0.0;
    for i in 0..k {
        let (phi, psi) = (&m[i].phi, &m[i + 1].phi);
        cocycle = cocycle.max(cocycle_defect(&ctx, phi, psi, mu)?.max());
        gauge = gauge.max(gauge_defect(&ctx, phi, 0.7, mu)?);
        let (fd, formula) = first_variation_j(&ctx, phi, psi, 1e-3)?;
        first_var = first_var.max((fd - formula).abs() / formula.abs().max(1e-12));
        for (_, js, expected) in scaling_check(&ctx, phi, &[0.25, 0.5, 0.75])? {
            scaling = scaling.max((js - expected).abs() / expected.abs().max(1e-300));
        }
    }
    out.push(Check::at_most(
        "cocycle",
        cocycle,
        COCYCLE_TOL,
        "Ding, F^0 and Mabuchi cocycle defects",
    ));
    out.push(Check::at_most(
        "ding_gauge",
        gauge,
        GAUGE_TOL,
        "|F(phi + 0.7) - F(phi)|",
    ));
    out.push(Check::at_most(
        "first_variation_j",
        first_var,
        FIRST_VARIATION_TOL,
        "centered difference of J against its first variation, relative",
    ));
    out.push(Check::at_most(
        "scaling_equality",
        scaling,
        SCALING_TOL,
        "|J(s phi) - s^2 J(phi)| / s^2 J(phi)",
    ));

    let jensen = m
        .iter()
        .map(|x| jensen_gap(&ctx, &x.phi, mu))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    out.push(Check::at_least(
        "jensen_gap",
        jensen,
        -INEQUALITY_TOL,
        "min over the family",
    ));

    let delta = *sweep.deltas.last().expect("nonempty sweep");
    let bound: Vec<Result<f64, LabError>> = m[..k]
        .par_iter()
        .map(|x| {
            let (l, r) = mabuchi_ding_bound(&ctx, &x.phi, mu, delta, &lab.cfg.solver)?;
            Ok(l - r)
        })
        .collect();
    let bound = bound
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    out.push(Check::at_least(
        "mabuchi_ding_bound",
        bound,
        -INEQUALITY_TOL,
        format!("min slack of mu F(phi) + avg H_0 >= nu(psi) on {k} samples, delta = {delta}"),
    ));

    let mut interp = f64::INFINITY;
    for x in &m[..k] {
        interp = interp.min(interpolation_slack(&ctx, &x.phi, 0.25 * mu, mu, 0.5)?);
    }
    out.push(Check::at_least(
        "interpolation",
        interp,
        -INEQUALITY_TOL,
        format!("concavity of t F_t in t on {k} samples"),
    ));

    if mu > 0.0 && lab.rhs.has_cones() {
        let mut approx = f64::INFINITY;
        for x in &m[..k] {
            for &d in &sweep.deltas {
                approx = approx.min(approximation_slack(&ctx, &x.phi, d, mu)?);
            }
        }
        out.push(Check::at_least(
            "regularized_ding_bound",
            approx,
            -INEQUALITY_TOL,
            "min of F_delta - F - (c - c_delta) / mu over samples and deltas",
        ));
    }

    let fields = family.fields();
    let mr = minimizer_check(&ctx, phi_ref, &fields, mu)?;
    out.push(Check::at_least(
        "minimizer",
        mr.min_difference,
        -INEQUALITY_TOL,
        format!(
            "min over {} potentials of F(phi) - F(phi_ref)",
            fields.len()
        ),
    ));
    out.push(Check::at_most(
        "minimum_nonpositive",
        mr.f_star,
        INEQUALITY_TOL,
        "F(phi_ref)",
    ));

    if mu > 0.0 {
        let mut worst: f64 = 0.0;
        for p in &sweep.paths {
            worst = worst.max(path_error(&ctx, p)?.abs());
        }
        out.push(Check::at_most(
            "path_identity",
            worst,
            PATH_TOL,
            format!("max over delta with {} t-steps", lab.cfg.solver.t_steps),
        ));
    }
    Ok(out)
}

/// Grid used for order checks must stay above the minimum resolution.
pub fn order_checks_possible(grid: &SphereGrid) -> bool {
    grid.n_phi() / 2 >= conic_ma::sphere::MIN_RESOLUTION && grid.n_phi() % 2 == 0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decades() {
        assert_eq!(
            decade_subsequence(&[1e-1, 3e-2, 1e-2, 3e-3, 1e-3]),
            vec![0, 2, 4]
        );
        assert_eq!(decade_subsequence(&[1.0, 0.5, 0.05]), vec![0, 2]);
    }

    #[test]
    fn order_check_at_roundoff_bounds_errors() {
        let c = order_check("x", &[(1e-13, 2e-13)], String::new());
        assert!(c.passed && c.kind == crate::artifacts::Bound::Upper);
        let c = order_check("x", &[(4e-6, 1e-6)], String::new());
        assert!(c.passed && (c.value - 4.0).abs() < 1e-12);
    }
}
