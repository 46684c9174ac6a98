use conic_ma::energy::{
    cocycle_defect, first_variation_j, gauge_defect, jensen_gap, scaling_check, EnergyContext,
    PotentialFamily,
};
use conic_ma::regularization::{RegularizedRhs, TwistSpec};
use conic_ma::sphere::{ConeData, Harmonic, SphereGrid};
use proptest::prelude::*;

fn setup(n: usize, cones: ConeData, mu: f64) -> (SphereGrid, RegularizedRhs) {
    let g = SphereGrid::build(n, cones, 2.0).unwrap();
    let tw = TwistSpec::new(mu, g.cones(), Harmonic::default()).unwrap();
    let rhs = RegularizedRhs::new(&g, &tw).unwrap();
    (g, rhs)
}

#[test]
fn energy_of_height_function() {
    // -int a x3 lap(a x3) = 2 a^2 int x3^2 = 2 a^2 V / 3, so J = a^2 / 3 and I = 2 a^2 / 3
    let a = 0.3;
    let mut errs = Vec::new();
    for n in [32, 64] {
        let (g, rhs) = setup(n, ConeData::none(), 1.0);
        let ctx = EnergyContext::new(&g, &rhs);
        let phi = g.field(|i| a * g.x(i)[2]);
        let j = ctx.j(&phi).unwrap();
        let i = ctx.i(&phi).unwrap();
        errs.push((j - a * a / 3.0).abs());
        assert!((i - 2.0 * a * a / 3.0).abs() < 5e-3 * a * a);
    }
    assert!(errs[1] < 1e-3 * a * a, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
}

#[test]
fn ding_vanishes_at_zero_on_the_round_sphere() {
    let (g, rhs) = setup(32, ConeData::none(), 0.8);
    let ctx = EnergyContext::new(&g, &rhs);
    let zero = conic_ma::sphere::ScalarField::zeros(g.len());
    assert!(ctx.ding(&zero, 0.8).unwrap().abs() < 1e-12);
    assert!(ctx.j(&zero).unwrap() == 0.0);
}

#[test]
fn cocycle_on_football() {
    let (g, rhs) = setup(64, ConeData::football(0.5), 1.0);
    let ctx = EnergyContext::new(&g, &rhs);
    let fam = PotentialFamily::random(&g, 4, 11, 0.2).fields();
    for w in fam.windows(2) {
        let d = cocycle_defect(&ctx, &w[0], &w[1], 1.0).unwrap();
        assert!(d.max() <= 1e-6, "{d:?}");
    }
}

#[test]
fn first_variation_of_j_on_football() {
    let (g, rhs) = setup(64, ConeData::football(0.5), 1.0);
    let ctx = EnergyContext::new(&g, &rhs);
    let fam = PotentialFamily::random(&g, 4, 5, 0.2).fields();
    for w in fam.windows(2) {
        let (fd, formula) = first_variation_j(&ctx, &w[0], &w[1], 1e-3).unwrap();
        assert!(
            (fd - formula).abs() <= 1e-4 * (1.0 + formula.abs()),
            "{fd} vs {formula}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn i_is_twice_j(seed in any::<u64>()) {
        let (g, rhs) = setup(32, ConeData::football(0.5), 1.0);
        let ctx = EnergyContext::new(&g, &rhs);
        let phi = &PotentialFamily::random(&g, 1, seed, 0.2).members[0].phi;
        let (i, j) = (ctx.i(phi).unwrap(), ctx.j(phi).unwrap());
        prop_assert!(j >= 0.0);
        prop_assert!((i - 2.0 * j).abs() <= 1e-8 * j.abs().max(1e-12), "I = {}, J = {}", i, j);
    }

    #[test]
    fn j_is_quadratic(seed in any::<u64>(), s in 0.05f64..1.0) {
        let (g, rhs) = setup(32, ConeData::none(), 1.0);
        let ctx = EnergyContext::new(&g, &rhs);
        let phi = &PotentialFamily::random(&g, 1, seed, 0.2).members[0].phi;
        for (_, js, expect) in scaling_check(&ctx, phi, &[s]).unwrap() {
            prop_assert!((js - expect).abs() <= 1e-8 * expect.abs().max(1e-12));
        }
    }

    #[test]
    fn ding_ignores_constants(seed in any::<u64>(), kappa in -3.0f64..3.0) {
        let (g, rhs) = setup(32, ConeData::football(0.5), 1.0);
        let ctx = EnergyContext::new(&g, &rhs);
        let phi = &PotentialFamily::random(&g, 1, seed, 0.2).members[0].phi;
        prop_assert!(gauge_defect(&ctx, phi, kappa, 1.0).unwrap() <= 1e-8);
    }

    #[test]
    fn jensen_gap_is_nonnegative(seed in any::<u64>()) {
        let (g, rhs) = setup(32, ConeData::football(0.5), 1.0);
        let ctx = EnergyContext::new(&g, &rhs);
        let phi = &PotentialFamily::random(&g, 1, seed, 0.2).members[0].phi;
        prop_assert!(jensen_gap(&ctx, phi, 1.0).unwrap() >= -1e-6);
    }
}
