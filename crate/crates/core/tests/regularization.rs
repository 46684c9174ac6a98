use std::f64::consts::PI;

use conic_ma::regularization::{
    normalization_defect, twist_degree, RegularizedRhs, TwistSpec, KE_WARNING,
};
use conic_ma::sphere::{Cone, ConeData, Harmonic, Point, SphereGrid};
use conic_ma::RegularizationError;
use proptest::prelude::*;

fn polar_pair(b0: f64, b1: f64) -> ConeData {
    ConeData::new(vec![
        Cone::new(Point::ZERO, b0),
        Cone::new(Point::Infinity, b1),
    ])
}

#[test]
fn football_constant_matches_closed_form() {
    // int (|S_0|^2 |S_inf|^2)^(-1/2) omega_0 = 2 pi * pi, so c = log(2 pi) - log(2 pi^2)
    let g = SphereGrid::build(128, ConeData::football(0.5), 2.0).unwrap();
    let tw = TwistSpec::new(1.0, g.cones(), Harmonic::default()).unwrap();
    let rhs = RegularizedRhs::new(&g, &tw).unwrap();
    assert!(rhs.h0.max_abs() < 1e-12);
    assert!((rhs.c + PI.ln()).abs() < 1e-4, "c = {}", rhs.c);
}

#[test]
fn infeasible_degree_names_the_identity() {
    let err = twist_degree(1.5, &polar_pair(0.5, 0.5)).unwrap_err();
    assert_eq!(err, RegularizationError::Infeasible(-0.5));
    assert!(err.to_string().contains("s = 2 - mu - sum(1 - beta_i)"));
}

#[test]
fn zero_degree_is_flagged() {
    let d = twist_degree(1.0, &polar_pair(0.5, 0.5)).unwrap();
    assert_eq!(d.s, 0.0);
    assert_eq!(d.warning, Some(KE_WARNING));
}

#[test]
fn declared_degree_must_agree() {
    let cones = polar_pair(0.6, 0.8);
    assert!(TwistSpec::with_declared_s(0.5, &cones, Harmonic::default(), 0.9).is_ok());
    assert!(matches!(
        TwistSpec::with_declared_s(0.5, &cones, Harmonic::default(), 1.0),
        Err(RegularizationError::DegreeMismatch { .. })
    ));
}

#[test]
fn pure_twist_has_no_ricci_potential() {
    let g = SphereGrid::build(32, ConeData::none(), 2.0).unwrap();
    let tw = TwistSpec::new(0.7, g.cones(), Harmonic::default()).unwrap();
    let rhs = RegularizedRhs::new(&g, &tw).unwrap();
    assert_eq!(rhs.h0.max_abs(), 0.0);
    assert!(rhs.c.abs() < 1e-14);
}

#[test]
fn twisted_norms_give_nonzero_h0_with_closed_form() {
    // With norm twists e^(-f_i), h_0 picks up sum (1 - beta_i) f_i up to a constant.
    let cones = ConeData::new(vec![
        Cone::new(Point::ZERO, 0.6).with_twist(Harmonic::new([0.0, 0.3, 0.0, 0.1])),
        Cone::new(Point::Infinity, 0.8),
    ]);
    let g = SphereGrid::build(128, cones, 2.0).unwrap();
    let tw = TwistSpec::new(0.8, g.cones(), Harmonic::default()).unwrap();
    let rhs = RegularizedRhs::new(&g, &tw).unwrap();
    let expected = g.field(|i| {
        let x = g.x(i);
        -0.4 * (0.3 * x[0] + 0.1 * x[2])
    });
    let mean = g.sum_weighted(&expected.values) / g.volume();
    let err = (0..g.len())
        .map(|i| (rhs.h0.values[i] - (expected.values[i] - mean)).abs())
        .fold(0.0, f64::max);
    assert!(rhs.h0.max_abs() > 1e-2);
    assert!(err < 1e-3, "{err}");
}

#[test]
fn regularized_rhs_is_normalized_and_constants_converge() {
    let cones = ConeData::new(vec![
        Cone::new(Point::ZERO, 0.6).with_twist(Harmonic::new([0.0, 0.3, 0.0, 0.1])),
        Cone::new(Point::Infinity, 0.8),
    ]);
    let g = SphereGrid::build(128, cones, 2.0).unwrap();
    let tw = TwistSpec::new(0.8, g.cones(), Harmonic::new([0.0, 0.2, 0.1, 0.0])).unwrap();
    let rhs = RegularizedRhs::new(&g, &tw).unwrap();
    let mut gaps = Vec::new();
    for delta in [1e-1, 3e-2, 1e-2, 3e-3, 1e-3] {
        let (h, c_delta) = rhs.build(&g, delta).unwrap();
        assert!(normalization_defect(&g, &h).abs() < 1e-8);
        gaps.push((c_delta - rhs.c).abs());
    }
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_identity(
        mu in 0.0f64..2.0,
        betas in prop::collection::vec(0.05f64..1.0, 0..4),
    ) {
        let points = [Point::ZERO, Point::Infinity, Point::finite(num_complex::Complex64::new(1.0, 0.0)),
            Point::finite(num_complex::Complex64::new(-1.0, 0.5))];
        let cones = ConeData::new(betas.iter().zip(points).map(|(&b, p)| Cone::new(p, b)).collect());
        let s = 2.0 - mu - betas.iter().map(|b| 1.0 - b).sum::<f64>();
        match twist_degree(mu, &cones) {
            Ok(d) => prop_assert!((d.s - s).abs() < 1e-12 || (d.s == 0.0 && s.abs() <= 1e-12)),
            Err(RegularizationError::Infeasible(v)) => {
                prop_assert!(s < 0.0);
                prop_assert!((v - s).abs() < 1e-12);
            }
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn normalization_holds_for_any_delta(delta in 1e-4f64..1.0, beta in 0.2f64..0.95) {
        let g = SphereGrid::build(32, ConeData::football(beta), 2.0).unwrap();
        let tw = TwistSpec::new(2.0 * beta, g.cones(), Harmonic::default()).unwrap();
        let rhs = RegularizedRhs::new(&g, &tw).unwrap();
        let h = rhs.h_delta(&g, delta).unwrap();
        prop_assert!(normalization_defect(&g, &h).abs() < 1e-10);
    }
}
