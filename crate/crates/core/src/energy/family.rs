use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sphere::{ScalarField, SphereGrid};

/// A labelled sample potential.
#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub label: String,
    pub phi: ScalarField,
}

/// Finite sample of admissible potentials.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialFamily {
    pub seed: u64,
    pub members: Vec<Member>,
}

/// Exponents (a, b, c) of the monomials x1^a x2^b x3^c of degree at most 3.
fn monomials() -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for d in 1..=3u32 {
        for a in 0..=d {
            for b in 0..=d - a {
                out.push([a, b, d - a - b]);
            }
        }
    }
    out
}

/// Scale making min(1 + lap(s p)) equal to `margin` (or 1 when lap p >= 0).
fn admissible_scale(grid: &SphereGrid, p: &ScalarField, margin: f64) -> f64 {
    let worst = grid.laplacian(p).min();
    if worst >= 0.0 {
        1.0
    } else {
        (1.0 - margin) / -worst
    }
}

impl PotentialFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn fields(&self) -> Vec<ScalarField> {
        self.members.iter().map(|m| m.phi.clone()).collect()
    }

    /// Random cubic polynomials in the embedding coordinates, scaled to keep
    /// min(1 + lap phi) >= margin, plus a random constant.
    pub fn random(grid: &SphereGrid, count: usize, seed: u64, margin: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let monos = monomials();
        let xs: Vec<[f64; 3]> = (0..grid.len()).map(|i| grid.x(i)).collect();
        let members = (0..count)
            .map(|m| {
                let coef: Vec<f64> = monos.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
                let amp: f64 = rng.gen_range(0.2..1.0);
                let offset: f64 = rng.gen_range(-1.0..1.0);
                let p = ScalarField::smooth(
                    xs.iter()
                        .map(|x| {
                            monos
                                .iter()
                                .zip(&coef)
                                .map(|(e, c)| {
                                    c * x[0].powi(e[0] as i32)
                                        * x[1].powi(e[1] as i32)
                                        * x[2].powi(e[2] as i32)
                                })
                                .sum()
                        })
                        .collect(),
                );
                let s = amp * admissible_scale(grid, &p, margin);
                Member {
                    label: format!("random-{m}"),
                    phi: p.scale(s).shift(offset),
                }
            })
            .collect();
        PotentialFamily { seed, members }
    }

    /// s phi for each s (admissible whenever phi is and 0 <= s <= 1).
    pub fn scaled(base: &ScalarField, samples: &[f64]) -> Self {
        let members = samples
            .iter()
            .map(|&s| Member {
                label: format!("scaled-{s}"),
                phi: base.scale(s),
            })
            .collect();
        PotentialFamily { seed: 0, members }
    }

    /// Gaussian bumps in chordal distance centred at the cone points and at the
    /// equator, scaled to the positivity margin.
    pub fn bumps(grid: &SphereGrid, width: f64, margin: f64) -> Self {
        let mut centres: Vec<(String, [f64; 3])> = grid
            .cones()
            .cones
            .iter()
            .enumerate()
            .map(|(i, c)| (format!("bump-cone-{i}"), c.point.unit_vector()))
            .collect();
        centres.push(("bump-equator".into(), [1.0, 0.0, 0.0]));
        let members = centres
            .into_iter()
            .map(|(label, c)| {
                let p = grid.field(|i| {
                    let x = grid.x(i);
                    let d2: f64 = (0..3).map(|k| (x[k] - c[k]).powi(2)).sum();
                    (-d2 / (width * width)).exp()
                });
                let s = admissible_scale(grid, &p, margin);
                Member {
                    label,
                    phi: p.scale(s),
                }
            })
            .collect();
        PotentialFamily { seed: 0, members }
    }

    /// a log(eps + |S_i|^2) for each eps; lap of this is at least -a for an untwisted norm.
    pub fn spikes(grid: &SphereGrid, cone: usize, a: f64, eps: &[f64]) -> Self {
        let s = grid.section_norm_sq(cone);
        let members = eps
            .iter()
            .map(|&e| Member {
                label: format!("spike-{cone}-{e:e}"),
                phi: s.map(|v| a * (e + v).ln()),
            })
            .collect();
        PotentialFamily { seed: 0, members }
    }

    pub fn extend(&mut self, other: PotentialFamily) {
        self.members.extend(other.members);
    }
}
