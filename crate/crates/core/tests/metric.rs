use std::f64::consts::PI;

use conic_ma::energy::PotentialFamily;
use conic_ma::metric::{
    c2_sandwich, graph_diameter, metric_density, radial_length, ricci_check, shortcut_test,
    ConformalMetric, GraphNode, MetricGraph,
};
use conic_ma::regularization::{RegularizedRhs, TwistSpec};
use conic_ma::solver::{continuity_run, football_density, SolverConfig};
use conic_ma::sphere::{ConeData, Density, Harmonic, ScalarField, SphereGrid};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn model_cone_radial_length() {
    // int_0^eps r^(beta - 1) dr = eps^beta / beta
    for beta in [0.3, 0.5, 0.7] {
        for eps in [0.01, 0.1, 0.5] {
            let r = shortcut_test(eps, ConformalMetric::ModelCone { beta }, 1.0).unwrap();
            let exact = eps.powf(beta) / beta;
            assert!(rel(0.5 * r.through, exact) < 1e-8, "beta {beta} eps {eps}");
        }
    }
}

#[test]
fn model_cone_shortcut_ratio() {
    // the developed cone has angle 2 pi beta; the chord spans pi beta of it
    for beta in [0.3, 0.5, 0.7] {
        let r = shortcut_test(0.1, ConformalMetric::ModelCone { beta }, 1.0).unwrap();
        assert!(
            (r.ratio() - (PI * beta / 2.0).sin()).abs() < 1e-6,
            "beta {beta}"
        );
        assert!(r.shortcut());
    }
}

#[test]
fn football_shortcut_exists_for_small_eps() {
    for beta in [0.3, 0.5, 0.7] {
        let r = shortcut_test(0.05, ConformalMetric::Football { beta }, 1.0).unwrap();
        assert!(r.shortcut(), "beta {beta}: {}", r.ratio());
    }
}

#[test]
fn football_radial_length() {
    // sqrt(2 beta) r^(beta - 1) / (1 + r^(2 beta)) integrates to sqrt(2 / beta) arctan(r^beta)
    let beta = 0.5;
    let g = SphereGrid::build(128, ConeData::football(beta), 2.0).unwrap();
    let rho = Density(football_density(&g, beta));
    for r0 in [0.1, 0.25, 0.5] {
        let l = radial_length(&g, &rho, 0, r0, 0.0).unwrap().length;
        let exact = (2.0 / beta).sqrt() * r0.powf(beta).atan();
        assert!(rel(l, exact) < 1e-2, "r0 {r0}: {l} vs {exact}");
    }
    assert!(radial_length(&g, &rho, 0, 1.0, 0.0).is_err());
}

#[test]
fn round_sphere_diameter() {
    // omega_0 has area 2 pi and curvature 2, radius 1 / sqrt 2
    let g = SphereGrid::build(64, ConeData::none(), 2.0).unwrap();
    let rho = Density(ScalarField::constant(g.len(), 1.0));
    let d = graph_diameter(&g, &rho).unwrap();
    assert!(rel(d, PI / 2f64.sqrt()) < 0.03, "{d}");
    assert!(
        d >= PI / 2f64.sqrt() * (1.0 - 1e-3),
        "graph paths are never shorter: {d}"
    );
}

#[test]
fn football_diameter() {
    // pole to pole along a meridian: sqrt(2 / beta) pi / 2
    let beta = 0.5;
    let g = SphereGrid::build(128, ConeData::football(beta), 2.0).unwrap();
    let rho = Density(football_density(&g, beta));
    let d = graph_diameter(&g, &rho).unwrap();
    assert!(rel(d, PI / (2.0 * beta).sqrt()) < 0.03, "{d}");
}

#[test]
fn flat_potential_has_unit_sandwich() {
    let g = SphereGrid::build(32, ConeData::none(), 2.0).unwrap();
    let tw = TwistSpec::new(1.0, g.cones(), Harmonic::default()).unwrap();
    let rhs = RegularizedRhs::new(&g, &tw).unwrap();
    let rho = metric_density(&g, &ScalarField::zeros(g.len())).unwrap();
    let s = c2_sandwich(&g, &rhs, &rho, 0.1).unwrap();
    assert!((s.c1 - 1.0).abs() < 1e-12 && (s.c2 - 1.0).abs() < 1e-12);
}

#[test]
fn ricci_of_solved_football_is_bounded_below() {
    let g = SphereGrid::build(64, ConeData::football(0.5), 2.0).unwrap();
    let tw = TwistSpec::new(1.0, g.cones(), Harmonic::default()).unwrap();
    let rhs = RegularizedRhs::new(&g, &tw).unwrap();
    let cfg = SolverConfig {
        t_steps: 8,
        lambda_check: false,
        ..SolverConfig::default()
    };
    let path = continuity_run(&g, &rhs, 3e-2, &cfg).unwrap();
    for s in [&path[0], path.last().unwrap()] {
        let r = ricci_check(&g, &rhs, s).unwrap();
        assert!(r.bounded_below(), "{r:?}");
        assert!(r.min_closed_form >= (rhs.mu() - s.t) - 1e-12);
    }
}

fn random_density(g: &SphereGrid, seed: u64) -> Density {
    let phi = &PotentialFamily::random(g, 1, seed, 0.2).members[0].phi;
    metric_density(g, phi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn graph_distance_is_a_metric(seed in any::<u64>(), a in 0usize..512, b in 0usize..512) {
        let g = SphereGrid::build(16, ConeData::none(), 2.0).unwrap();
        let graph = MetricGraph::new(&g, &random_density(&g, seed)).unwrap();
        let m = g.n_phi();
        let (a, b) = (GraphNode::Grid(m + a % (g.len() - 2 * m)), GraphNode::Grid(m + b % (g.len() - 2 * m)));
        let ab = graph.distance(a, b).unwrap();
        let ba = graph.distance(b, a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab));
        let via = graph.distance(a, GraphNode::South).unwrap() + graph.distance(GraphNode::South, b).unwrap();
        prop_assert!(ab <= via * (1.0 + 1e-12));
        prop_assert!(graph.distance(a, a).unwrap() == 0.0);
    }
}
