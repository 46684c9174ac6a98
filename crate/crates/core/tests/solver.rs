use conic_ma::regularization::{RegularizedRhs, TwistSpec};
use conic_ma::solver::{continuity_run, estimate_lambda1, newton_solve, residual, SolverConfig};
use conic_ma::sphere::{ConeData, Harmonic, ScalarField, SphereGrid};
use conic_ma::SolverError;

fn fs(n: usize) -> SphereGrid {
    SphereGrid::build(n, ConeData::none(), 2.0).unwrap()
}

fn interior_error(g: &SphereGrid, a: &ScalarField, b: &ScalarField) -> f64 {
    let mask = g.interior_mask();
    (0..g.len())
        .filter(|&i| mask[i])
        .map(|i| (a.values[i] - b.values[i]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn zero_right_hand_side_gives_zero_potential() {
    let g = fs(32);
    let h = ScalarField::zeros(g.len());
    let cfg = SolverConfig::default();
    for t in [0.0, 0.5, 1.0] {
        let s = newton_solve(&g, &h, t, &ScalarField::zeros(g.len()), &cfg).unwrap();
        assert!(s.phi.max_abs() < 1e-12);
        assert_eq!(s.iterations, 0);
    }
}

#[test]
fn round_sphere_first_eigenvalue_is_two() {
    let mut errs = Vec::new();
    for n in [32, 64] {
        let g = fs(n);
        let l = estimate_lambda1(&g, &ScalarField::zeros(g.len())).unwrap();
        errs.push((l - 2.0).abs());
    }
    assert!(errs[1] < 2e-3, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
}

#[test]
fn manufactured_solution_is_recovered() {
    // phi* = a x3 + b x1 has lap phi* = -2 phi*, so h = log(1 - 2 phi*) + t phi*
    let (a, b, t) = (0.2, 0.1, 0.5);
    let mut errs = Vec::new();
    for n in [32, 64] {
        let g = fs(n);
        let exact = g.field(|i| {
            let x = g.x(i);
            a * x[2] + b * x[0]
        });
        let h = exact.map(|p| (1.0 - 2.0 * p).ln() + t * p);
        let s = newton_solve(
            &g,
            &h,
            t,
            &ScalarField::zeros(g.len()),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(s.residual <= 1e-9);
        assert!((residual(&g, &h, t, &s.phi) - s.residual).abs() < 1e-15);
        errs.push(interior_error(&g, &s.phi, &exact));
    }
    assert!(errs[1] < 1e-3, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
}

#[test]
fn calabi_yau_endpoint_has_mean_zero() {
    let g = fs(32);
    let h = g.field(|i| {
        let x = g.x(i);
        0.3 * x[2] * x[2] - 0.1
    });
    let v = g.sum_weighted(&h.map(f64::exp).values);
    let h = h.shift(-(v / g.volume()).ln());
    let s = newton_solve(
        &g,
        &h,
        0.0,
        &ScalarField::zeros(g.len()),
        &SolverConfig::default(),
    )
    .unwrap();
    assert!(s.residual <= 1e-9);
    assert!(g.sum_weighted(&s.phi.values).abs() < 1e-12);
}

#[test]
fn inadmissible_start_is_rejected() {
    let g = fs(32);
    let init = g.field(|i| 2.0 * g.x(i)[2]);
    let err = newton_solve(
        &g,
        &ScalarField::zeros(g.len()),
        0.5,
        &init,
        &SolverConfig::default(),
    )
    .unwrap_err();
    assert!(matches!(err, SolverError::NotAdmissible(m) if m < 0.0));
}

#[test]
fn football_path_reaches_mu_under_the_guard() {
    let g = SphereGrid::build(64, ConeData::football(0.5), 2.0).unwrap();
    let tw = TwistSpec::new(1.0, g.cones(), Harmonic::default()).unwrap();
    let rhs = RegularizedRhs::new(&g, &tw).unwrap();
    let cfg = SolverConfig {
        t_steps: 16,
        ..SolverConfig::default()
    };
    let path = continuity_run(&g, &rhs, 1e-1, &cfg).unwrap();
    assert_eq!(path.first().unwrap().t, 0.0);
    assert_eq!(path.last().unwrap().t, 1.0);
    for s in &path {
        assert!(s.residual <= cfg.tol);
        assert!(s.margin > 0.0);
        assert!(s.lambda1.unwrap() > s.t);
    }
    assert!(path.windows(2).all(|w| w[1].t > w[0].t));
}

#[test]
fn guard_rejects_t_beyond_first_eigenvalue() {
    // on the round sphere lambda1 = 2, so a twist with mu > 2 is caught by the guard
    let g = fs(32);
    let h = ScalarField::zeros(g.len());
    let s = newton_solve(
        &g,
        &h,
        2.5,
        &ScalarField::zeros(g.len()),
        &SolverConfig::default(),
    )
    .unwrap();
    let l = estimate_lambda1(&g, &s.phi).unwrap();
    assert!(l < s.t);
}

#[test]
fn bad_delta_is_rejected() {
    let g = SphereGrid::build(32, ConeData::football(0.5), 2.0).unwrap();
    let tw = TwistSpec::new(1.0, g.cones(), Harmonic::default()).unwrap();
    let rhs = RegularizedRhs::new(&g, &tw).unwrap();
    assert_eq!(
        continuity_run(&g, &rhs, 0.0, &SolverConfig::default()).unwrap_err(),
        SolverError::BadDelta(0.0)
    );
}
