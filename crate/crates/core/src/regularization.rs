//! Twist forms, the Ricci potential h_0, the conic right-hand side H_0 and its
//! regularizations h_delta with their normalizing constants.

use crate::error::RegularizationError;
use crate::sphere::{ConeData, Density, Harmonic, ScalarField, SphereGrid};

pub const KE_WARNING: &str = "Omega = 0: conic Kahler-Einstein case";

/// Degree tolerance for treating s as zero.
const S_ZERO: f64 = 1e-12;
/// Largest admissible weighted mean of the h_0 source.
const MEAN_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Degree {
    pub s: f64,
    pub warning: Option<&'static str>,
}

/// s = 2 - mu - sum(1 - beta_i): the only degree for which a twist Omega in the class of s omega_0 can exist.
pub fn twist_degree(mu: f64, cones: &ConeData) -> Result<Degree, RegularizationError> {
    let s = 2.0 - mu - cones.deficit();
    if s < -S_ZERO {
        return Err(RegularizationError::Infeasible(s));
    }
    if s.abs() <= S_ZERO {
        return Ok(Degree {
            s: 0.0,
            warning: Some(KE_WARNING),
        });
    }
    Ok(Degree { s, warning: None })
}

/// Omega = s omega_0 + i d dbar chi, with Ricci lower bound mu.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistSpec {
    pub mu: f64,
    pub s: f64,
    pub chi: Harmonic,
}

impl TwistSpec {
    pub fn new(mu: f64, cones: &ConeData, chi: Harmonic) -> Result<Self, RegularizationError> {
        let deg = twist_degree(mu, cones)?;
        let spec = TwistSpec { mu, s: deg.s, chi };
        let min = spec.min_density();
        if min < -1e-12 {
            return Err(RegularizationError::NegativeTwist(min));
        }
        Ok(spec)
    }

    /// As `new`, also checking a configured value of s against the degree identity.
    pub fn with_declared_s(
        mu: f64,
        cones: &ConeData,
        chi: Harmonic,
        s: f64,
    ) -> Result<Self, RegularizationError> {
        let spec = Self::new(mu, cones, chi)?;
        if (spec.s - s).abs() > 1e-9 {
            return Err(RegularizationError::DegreeMismatch {
                configured: s,
                derived: spec.s,
            });
        }
        Ok(spec)
    }

    /// Closed-form minimum over the sphere of s - 2 (c1 x1 + c2 x2 + c3 x3).
    pub fn min_density(&self) -> f64 {
        let c = &self.chi.c;
        self.s - 2.0 * (c[1] * c[1] + c[2] * c[2] + c[3] * c[3]).sqrt()
    }

    pub fn omega_density(&self, grid: &SphereGrid) -> Density {
        Density(grid.field(|i| self.s + self.chi.laplacian(&grid.x(i))))
    }

    /// Density of Omega_0 - Omega - sum (1 - beta_i) R_i, with Omega_0 = (2 - mu) omega_0.
    pub fn h0_source(&self, grid: &SphereGrid) -> ScalarField {
        let cones = grid.cones();
        grid.field(|i| {
            let x = grid.x(i);
            let mut v = 2.0 - self.mu - self.s - self.chi.laplacian(&x);
            for c in &cones.cones {
                v -= (1.0 - c.beta) * (1.0 + c.twist.laplacian(&x));
            }
            v
        })
    }
}

/// Mean-zero h_0 solving lap h_0 = density(Omega_0 - Omega - sum (1 - beta_i) R_i).
pub fn solve_h0(grid: &SphereGrid, twist: &TwistSpec) -> Result<ScalarField, RegularizationError> {
    let src = twist.h0_source(grid);
    if src.max_abs() == 0.0 {
        return Ok(ScalarField::zeros(grid.len()));
    }
    let (h0, mean) = grid
        .poisson(&src)
        .map_err(|_| RegularizationError::Quadrature)?;
    if mean.abs() > MEAN_TOL {
        return Err(RegularizationError::NonzeroMean(mean));
    }
    Ok(h0)
}

/// h_0, the section norms and the constant c; produces h_delta and H_0.
#[derive(Clone, Debug)]
pub struct RegularizedRhs {
    pub twist: TwistSpec,
    pub h0: ScalarField,
    /// Section norms |S_i|^2 per cone.
    pub norms: Vec<ScalarField>,
    pub c: f64,
    betas: Vec<f64>,
}

impl RegularizedRhs {
    pub fn new(grid: &SphereGrid, twist: &TwistSpec) -> Result<Self, RegularizationError> {
        let h0 = solve_h0(grid, twist)?;
        let norms = (0..grid.cones().len())
            .map(|i| grid.section_norm_sq(i))
            .collect();
        let betas = grid.cones().cones.iter().map(|c| c.beta).collect();
        let mut rhs = RegularizedRhs {
            twist: twist.clone(),
            h0,
            norms,
            c: 0.0,
            betas,
        };
        rhs.c = rhs.normalize_constant(grid, 0.0)?;
        Ok(rhs)
    }

    pub fn mu(&self) -> f64 {
        self.twist.mu
    }

    pub fn has_cones(&self) -> bool {
        !self.norms.is_empty()
    }

    /// h_0 - sum (1 - beta_i) log(delta + |S_i|^2), without the constant.
    fn unnormalized(&self, delta: f64) -> ScalarField {
        let mut f = self.h0.clone();
        for (s, beta) in self.norms.iter().zip(&self.betas) {
            let a = 1.0 - beta;
            f.values
                .iter_mut()
                .zip(&s.values)
                .for_each(|(v, si)| *v -= a * (delta + si).ln());
        }
        if delta == 0.0 && self.has_cones() {
            f = f.with_kind(crate::sphere::FieldKind::Singular);
        }
        f
    }

    /// c_delta = log V - log int exp(h_0 - sum (1 - beta_i) log(delta + |S_i|^2)) omega_0; delta = 0 gives c.
    pub fn normalize_constant(
        &self,
        grid: &SphereGrid,
        delta: f64,
    ) -> Result<f64, RegularizationError> {
        let f = self.unnormalized(delta).map(f64::exp);
        let integral = grid
            .integrate(&f)
            .map_err(|_| RegularizationError::Quadrature)?;
        if !(integral.is_finite() && integral > 0.0) {
            return Err(RegularizationError::Quadrature);
        }
        Ok(grid.volume().ln() - integral.ln())
    }

    /// h_delta with its constant c_delta; delta = 0 returns the singular H_0 and c.
    pub fn build(
        &self,
        grid: &SphereGrid,
        delta: f64,
    ) -> Result<(ScalarField, f64), RegularizationError> {
        let c = if delta == 0.0 {
            self.c
        } else {
            self.normalize_constant(grid, delta)?
        };
        Ok((self.unnormalized(delta).shift(c), c))
    }

    pub fn h_delta(
        &self,
        grid: &SphereGrid,
        delta: f64,
    ) -> Result<ScalarField, RegularizationError> {
        Ok(self.build(grid, delta)?.0)
    }

    /// H_0 = h_0 - sum (1 - beta_i) log |S_i|^2 + c, singular at the cones.
    pub fn big_h0(&self) -> ScalarField {
        self.unnormalized(0.0).shift(self.c)
    }

    /// sum (1 - beta_i) log |S_i|^2 (singular).
    pub fn log_divisor(&self) -> ScalarField {
        self.h0.sub(&self.unnormalized(0.0))
    }
}

/// Normalization defect int (e^h - 1) omega_0.
pub fn normalization_defect(grid: &SphereGrid, h: &ScalarField) -> f64 {
    grid.integrate(&h.map(f64::exp))
        .map(|v| v - grid.volume())
        .unwrap_or(f64::NAN)
}
