use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::GridError;

/// A point of the extended complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Finite { re: f64, im: f64 },
    Infinity,
}

impl Point {
    pub const ZERO: Point = Point::Finite { re: 0.0, im: 0.0 };

    pub fn finite(z: Complex64) -> Self {
        Point::Finite { re: z.re, im: z.im }
    }

    /// Unit vector in R^3 under inverse stereographic projection.
    pub fn unit_vector(&self) -> [f64; 3] {
        match *self {
            Point::Infinity => [0.0, 0.0, -1.0],
            Point::Finite { re, im } => {
                let r2 = re * re + im * im;
                let d = 1.0 + r2;
                [2.0 * re / d, 2.0 * im / d, (1.0 - r2) / d]
            }
        }
    }

    /// Squared chordal half-distance, equal to the FS section norm.
    pub fn chordal_sq(&self, other: &Point) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        let d: f64 = (0..3).map(|i| (a[i] - b[i]).powi(2)).sum();
        d / 4.0
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self, Point::Finite { re, im } if re == 0.0 && im == 0.0)
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }
}

/// Linear combination c0 + c1 x1 + c2 x2 + c3 x3 of the embedding coordinates.
///
/// These span the first two eigenspaces of the FS Laplacian, so lap = -2 (f - c0).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub c: [f64; 4],
}

impl Harmonic {
    pub fn new(c: [f64; 4]) -> Self {
        Harmonic { c }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0)
    }

    pub fn value(&self, x: &[f64; 3]) -> f64 {
        self.c[0] + self.c[1] * x[0] + self.c[2] * x[1] + self.c[3] * x[2]
    }

    pub fn laplacian(&self, x: &[f64; 3]) -> f64 {
        -2.0 * (self.value(x) - self.c[0])
    }

    /// Holomorphic derivative d/dz at a finite point.
    pub fn dz(&self, z: Complex64) -> Complex64 {
        let zb = z.conj();
        let q = 1.0 + z.norm_sqr();
        let q2 = q * q;
        let d1 = (Complex64::new(1.0, 0.0) - zb * zb) / q2;
        let d2 = Complex64::new(0.0, -1.0) * (Complex64::new(1.0, 0.0) + zb * zb) / q2;
        let d3 = -2.0 * zb / q2;
        d1 * self.c[1] + d2 * self.c[2] + d3 * self.c[3]
    }

    /// Whether the field is invariant under rotation about the polar axis.
    pub fn is_axisymmetric(&self) -> bool {
        self.c[1] == 0.0 && self.c[2] == 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub point: Point,
    pub beta: f64,
    /// Norm twist f: the Hermitian norm is the FS norm times exp(-f).
    pub twist: Harmonic,
}

impl Cone {
    pub fn new(point: Point, beta: f64) -> Self {
        Cone {
            point,
            beta,
            twist: Harmonic::default(),
        }
    }

    pub fn with_twist(mut self, twist: Harmonic) -> Self {
        self.twist = twist;
        self
    }

    pub fn is_polar(&self) -> bool {
        self.point.is_zero() || self.point.is_infinity()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConeData {
    pub cones: Vec<Cone>,
}

impl ConeData {
    pub fn new(cones: Vec<Cone>) -> Self {
        ConeData { cones }
    }

    pub fn none() -> Self {
        ConeData::default()
    }

    /// Two cones of equal angle at 0 and infinity.
    pub fn football(beta: f64) -> Self {
        ConeData::new(vec![
            Cone::new(Point::ZERO, beta),
            Cone::new(Point::Infinity, beta),
        ])
    }

    pub fn len(&self) -> usize {
        self.cones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cones.is_empty()
    }

    pub fn deficit(&self) -> f64 {
        self.cones.iter().map(|c| 1.0 - c.beta).sum()
    }

    pub fn min_beta(&self) -> Option<f64> {
        self.cones.iter().map(|c| c.beta).reduce(f64::min)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        for c in &self.cones {
            if !(c.beta > 0.0 && c.beta < 1.0) {
                return Err(GridError::BadConeAngle(c.beta));
            }
        }
        for i in 0..self.cones.len() {
            for j in i + 1..self.cones.len() {
                if self.cones[i].point.chordal_sq(&self.cones[j].point) < 1e-24 {
                    return Err(GridError::CoincidentCones(i, j));
                }
            }
        }
        Ok(())
    }

    /// Cones at 0 and infinity with equal angles and no norm twists.
    pub fn is_football(&self) -> bool {
        self.cones.len() == 2
            && self.cones.iter().any(|c| c.point.is_zero())
            && self.cones.iter().any(|c| c.point.is_infinity())
            && self.cones[0].beta == self.cones[1].beta
            && self.cones.iter().all(|c| c.twist.is_zero())
    }
}
