use std::f64::consts::PI;

use conic_ma::sphere::{ConeData, ScalarField, SphereGrid};
use proptest::prelude::*;

fn fs(n: usize) -> SphereGrid {
    SphereGrid::build(n, ConeData::none(), 2.0).unwrap()
}

/// Height function on the unit sphere written in log-polar coordinates.
fn height(u: f64) -> f64 {
    -u.tanh()
}

fn interior_error(g: &SphereGrid, a: &ScalarField, b: &ScalarField) -> f64 {
    let mask = g.interior_mask();
    (0..g.len())
        .filter(|&i| mask[i])
        .map(|i| (a.values[i] - b.values[i]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn area_is_two_pi() {
    for n in [32, 64, 128] {
        let g = fs(n);
        assert!(
            (g.volume() - 2.0 * PI).abs() < 1e-5,
            "N = {n}: {}",
            g.volume()
        );
    }
}

#[test]
fn height_is_first_eigenfunction_to_second_order() {
    // lap x3 = -2 x3 on the round sphere of Ricci density 2
    let mut errs = Vec::new();
    for n in [32, 64, 128] {
        let g = fs(n);
        let f = g.field_u(height);
        let exact = g.field_u(|u| -2.0 * height(u));
        errs.push(interior_error(&g, &g.laplacian(&f), &exact));
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 3.5 && ratio < 4.5, "errors {errs:?}");
    }
}

#[test]
fn poisson_inverts_laplacian_on_degree_one() {
    let g = fs(128);
    // lap v = x1 has v = -x1 / 2
    let f = g.field(|i| g.x(i)[0]);
    let (v, mean) = g.poisson(&f).unwrap();
    assert!(mean.abs() < 1e-12);
    let exact = g.field(|i| -0.5 * g.x(i)[0]);
    assert!(interior_error(&g, &v, &exact) < 1e-3);
    let back = g.laplacian(&v);
    let err = interior_error(&g, &back, &f);
    assert!(err < 1e-10, "{err}");
}

#[test]
fn document_round_trip() {
    let g = fs(32);
    let f = g.field(|i| g.x(i)[0] + 2.0 * g.x(i)[2]);
    let doc = g.to_document(&f).unwrap();
    let text = serde_json::to_string(&doc).unwrap();
    let back = g
        .from_document(&serde_json::from_str(&text).unwrap())
        .unwrap();
    assert_eq!(back, f);
}

#[test]
fn resolution_below_minimum_is_rejected() {
    assert!(SphereGrid::build(8, ConeData::none(), 2.0).is_err());
}

fn trig_field(g: &SphereGrid, c: &[f64; 6]) -> ScalarField {
    g.field(|i| {
        let x = g.x(i);
        c[0] * x[0]
            + c[1] * x[1]
            + c[2] * x[2]
            + c[3] * x[0] * x[2]
            + c[4] * x[1] * x[1]
            + c[5] * (3.0 * x[2]).sin()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn laplacian_is_conservative(c in prop::array::uniform6(-1.0f64..1.0)) {
        let g = fs(32);
        let f = trig_field(&g, &c);
        let total = g.sum_weighted(&g.laplacian(&f).values);
        prop_assert!(total.abs() < 1e-12);
    }

    #[test]
    fn laplacian_is_symmetric(
        a in prop::array::uniform6(-1.0f64..1.0),
        b in prop::array::uniform6(-1.0f64..1.0),
    ) {
        let g = fs(32);
        let (f, h) = (trig_field(&g, &a), trig_field(&g, &b));
        let lf = g.laplacian(&f);
        let lh = g.laplacian(&h);
        let x = g.sum_weighted(&lf.mul(&h).values);
        let y = g.sum_weighted(&f.mul(&lh).values);
        prop_assert!((x - y).abs() < 1e-11 * (1.0 + x.abs()));
    }

    #[test]
    fn laplacian_kills_constants(c in -10.0f64..10.0) {
        let g = fs(32);
        let l = g.laplacian(&ScalarField::constant(g.len(), c));
        prop_assert!(l.max_abs() < 1e-9);
    }

    #[test]
    fn dirichlet_form_is_nonnegative(c in prop::array::uniform6(-1.0f64..1.0)) {
        let g = fs(32);
        let f = trig_field(&g, &c);
        let e = -g.sum_weighted(&f.mul(&g.laplacian(&f)).values);
        prop_assert!(e >= -1e-12);
    }
}
