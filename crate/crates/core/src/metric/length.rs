use num_complex::Complex64;
use serde::Serialize;

use crate::error::MetricError;
use crate::sphere::{Chart, Density, Point, SphereGrid};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LengthReport {
    pub curve: String,
    pub metric: String,
    pub length: f64,
    pub oracle: Option<f64>,
}

impl LengthReport {
    pub fn with_oracle(mut self, value: f64) -> Self {
        self.oracle = Some(value);
        self
    }

    pub fn relative_error(&self) -> Option<f64> {
        self.oracle.map(|o| (self.length - o).abs() / o.abs())
    }
}

/// Integral of an exponential through (0, a) and (h, b) over [0, x].
fn log_linear(a: f64, b: f64, h: f64, x: f64) -> f64 {
    let k = (b / a).ln() / h;
    if (k * x).abs() < 1e-12 {
        a * x
    } else {
        a * (k * x).exp_m1() / k
    }
}

/// Conformal factor of rho omega_0 in the log-polar coordinates (v, theta) of either chart:
/// ds = sqrt(rho / 2) / cosh(v) |d(v + i theta)|.
pub(crate) fn log_polar_factor(rho: f64, v: f64) -> f64 {
    (0.5 * rho).sqrt() / v.cosh()
}

/// Length of the ray at angle 0 from polar cone `cone` out to chart radius `r0` under rho omega_0.
/// The integrand is interpolated log-linearly in log r; the part inside the first interior row
/// is an exponential tail fitted to rows 1 and 2.
pub fn radial_length(
    grid: &SphereGrid,
    rho: &Density,
    cone: usize,
    r0: f64,
    delta: f64,
) -> Result<LengthReport, MetricError> {
    let c = &grid.cones().cones[cone];
    let chart = match c.point {
        Point::Infinity => Chart::W,
        p if p.is_zero() => Chart::Z,
        _ => return Err(MetricError::NotPolar(cone)),
    };
    let zone = grid.zones()[cone]
        .as_ref()
        .ok_or(MetricError::NotPolar(cone))?;
    let h = grid.h();
    let sigma = |radial: usize| -> Result<(f64, f64), MetricError> {
        let idx = grid
            .node_from_polar(chart, radial, 0)
            .expect("radial index within grid");
        let v = grid.chart_coordinate(chart, idx).norm().ln();
        let r = rho.0.values[idx];
        if !(r > 0.0) {
            return Err(MetricError::NonPositive(idx));
        }
        Ok((v, log_polar_factor(r, v)))
    };
    let (v1, s1) = sigma(1)?;
    let (v2, s2) = sigma(2)?;
    if !(r0 <= zone.r_max && r0.ln() > v2) {
        return Err(MetricError::OutsideAnnulus(r0));
    }
    let kappa = (s2 / s1).ln() / h;
    if !(kappa > 0.0) {
        return Err(MetricError::Quadrature(format!(
            "integrand does not decay toward the cone (rate {kappa:.3})"
        )));
    }
    let target = r0.ln();
    let mut total = s1 / kappa;
    let (mut v, mut s) = (v1, s1);
    let mut radial = 1;
    loop {
        let (vn, sn) = sigma(radial + 1)?;
        if vn >= target {
            total += log_linear(s, sn, vn - v, target - v);
            break;
        }
        total += log_linear(s, sn, vn - v, vn - v);
        (v, s) = (vn, sn);
        radial += 1;
    }
    Ok(LengthReport {
        curve: format!("ray from cone {cone} to radius {r0}"),
        metric: format!("delta = {delta}"),
        length: total,
        oracle: None,
    })
}

/// Smallest C with L(r0) <= C r0^beta / beta over the samples (r0, L).
pub fn fit_envelope(samples: &[(f64, f64)], beta: f64) -> f64 {
    samples
        .iter()
        .map(|&(r0, l)| l * beta / r0.powf(beta))
        .fold(0.0, f64::max)
}

/// Rotationally symmetric conformal metrics ds = lambda(|z|) |dz| with a cone at z = 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ConformalMetric {
    /// |z|^(beta - 1) |dz|
    ModelCone { beta: f64 },
    /// Exact football metric with equal angles, the pullback of the round metric of curvature 1.
    Football { beta: f64 },
}

impl ConformalMetric {
    pub fn beta(&self) -> f64 {
        match *self {
            ConformalMetric::ModelCone { beta } | ConformalMetric::Football { beta } => beta,
        }
    }

    pub fn factor(&self, r: f64) -> f64 {
        match *self {
            ConformalMetric::ModelCone { beta } => r.powf(beta - 1.0),
            ConformalMetric::Football { beta } => {
                (2.0 * beta).sqrt() * r.powf(beta - 1.0) / (1.0 + r.powf(2.0 * beta))
            }
        }
    }

    /// Density relative to omega_0: lambda^2 (1 + r^2)^2 / 2.
    pub fn density(&self, r: f64) -> f64 {
        let l = self.factor(r);
        0.5 * l * l * (1.0 + r * r).powi(2)
    }

    pub fn label(&self) -> String {
        match *self {
            ConformalMetric::ModelCone { beta } => format!("model cone beta = {beta}"),
            ConformalMetric::Football { beta } => format!("football beta = {beta}"),
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let m = 2 * panels;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

const PANELS: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShortcutReport {
    pub eps: f64,
    pub beta: f64,
    pub metric: String,
    /// radial path eps -> 0 -> -eps
    pub through: f64,
    /// preimage of the chord between the two points in the developed cone
    pub around: f64,
}

impl ShortcutReport {
    pub fn ratio(&self) -> f64 {
        self.around / self.through
    }

    pub fn shortcut(&self) -> bool {
        self.around < self.through
    }
}

/// Lengths of the two candidate curves joining z = eps and z = -eps.
pub fn shortcut_test(
    eps: f64,
    metric: ConformalMetric,
    r_max: f64,
) -> Result<ShortcutReport, MetricError> {
    if !(eps > 0.0 && eps <= r_max) {
        return Err(MetricError::EpsilonTooLarge(eps));
    }
    let beta = metric.beta();
    // r = eps x^(1/beta) turns the radial integrand into a smooth one.
    let radial = simpson(
        |x| {
            if x == 0.0 {
                match metric {
                    ConformalMetric::ModelCone { .. } => eps.powf(beta) / beta,
                    ConformalMetric::Football { .. } => (2.0 * beta).sqrt() * eps.powf(beta) / beta,
                }
            } else {
                let r = eps * x.powf(1.0 / beta);
                metric.factor(r) * eps / beta * x.powf(1.0 / beta - 1.0)
            }
        },
        0.0,
        1.0,
        PANELS,
    );
    let wp = Complex64::new(eps.powf(beta) / beta, 0.0);
    let wq = wp * Complex64::from_polar(1.0, std::f64::consts::PI * beta);
    let dw = wq - wp;
    let around = simpson(
        |s| {
            let w = wp + dw * s;
            let bw = w * beta;
            let z = bw.powf(1.0 / beta);
            metric.factor(z.norm()) * bw.norm().powf(1.0 / beta - 1.0) * dw.norm()
        },
        0.0,
        1.0,
        PANELS,
    );
    Ok(ShortcutReport {
        eps,
        beta,
        metric: metric.label(),
        through: 2.0 * radial,
        around,
    })
}
