use serde::Serialize;

use super::functionals::EnergyContext;
use crate::error::EnergyError;
use crate::sphere::{FieldKind, ScalarField};

/// Family-relative log alpha-invariant probe with vol = omega_0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaProbe {
    pub alphas: Vec<f64>,
    /// max over the family of (1/V) int e^(alpha (sup phi - phi)) / prod |S_i|^(2(1 - beta_i)); infinite on overflow.
    pub c_alpha: Vec<f64>,
    /// C_alpha of a constant potential.
    pub c0: f64,
    pub cap: f64,
    /// Largest grid alpha whose C_alpha is below the cap.
    pub alpha_pass: Option<f64>,
}

fn weighted_average(
    ctx: &EnergyContext,
    phi: &ScalarField,
    alpha: f64,
) -> Result<f64, EnergyError> {
    let sup = phi.max();
    let logdiv = ctx.rhs.log_divisor();
    let expo: Vec<f64> = phi
        .values
        .iter()
        .zip(&logdiv.values)
        .map(|(p, l)| alpha * (sup - p) - l)
        .collect();
    if expo.iter().any(|&e| e > 700.0) {
        return Err(EnergyError::Overflow(alpha));
    }
    let kind = if ctx.rhs.has_cones() {
        FieldKind::Singular
    } else {
        FieldKind::Smooth
    };
    ctx.average(&ScalarField {
        values: expo.iter().map(|e| e.exp()).collect(),
        kind,
    })
}

/// Scans the alpha grid; C_alpha passes when it stays below `cap_factor` times C_0.
pub fn alpha_probe(
    ctx: &EnergyContext,
    family: &[ScalarField],
    alphas: &[f64],
    cap_factor: f64,
) -> Result<AlphaProbe, EnergyError> {
    let c0 = weighted_average(ctx, &ScalarField::zeros(ctx.grid.len()), 0.0)?;
    let cap = cap_factor * c0;
    let mut c_alpha = Vec::with_capacity(alphas.len());
    for &a in alphas {
        let mut worst: f64 = 0.0;
        for phi in family {
            match weighted_average(ctx, phi, a) {
                Ok(v) => worst = worst.max(v),
                Err(EnergyError::Overflow(_)) => worst = f64::INFINITY,
                Err(e) => return Err(e),
            }
        }
        c_alpha.push(worst);
    }
    let alpha_pass = alphas
        .iter()
        .zip(&c_alpha)
        .filter(|(_, &c)| c <= cap)
        .map(|(&a, _)| a)
        .reduce(f64::max);
    Ok(AlphaProbe {
        alphas: alphas.to_vec(),
        c_alpha,
        c0,
        cap,
        alpha_pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub label: String,
    pub j: f64,
    pub ding: f64,
    pub mabuchi: f64,
    pub sup_abs: f64,
}

/// Affine lower envelope F >= eps J - C and the C^0 fit sup|phi| <= C (1 + J).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProperScan {
    pub t: f64,
    pub points: Vec<ScanPoint>,
    pub eps_hat: f64,
    pub c_hat: f64,
    pub c0_fit: f64,
}

pub fn properness_scan(
    ctx: &EnergyContext,
    labelled: &[(String, ScalarField)],
    t: f64,
) -> Result<ProperScan, EnergyError> {
    let points: Vec<ScanPoint> = labelled
        .iter()
        .map(|(label, phi)| {
            Ok(ScanPoint {
                label: label.clone(),
                j: ctx.j(phi)?,
                ding: ctx.ding(phi, t)?,
                mabuchi: ctx.mabuchi(phi, t)?,
                sup_abs: phi.max_abs(),
            })
        })
        .collect::<Result<_, EnergyError>>()?;
    let n = points.len() as f64;
    let (mj, mf) = (
        points.iter().map(|p| p.j).sum::<f64>() / n,
        points.iter().map(|p| p.ding).sum::<f64>() / n,
    );
    let sjj: f64 = points.iter().map(|p| (p.j - mj).powi(2)).sum();
    let sjf: f64 = points.iter().map(|p| (p.j - mj) * (p.ding - mf)).sum();
    let eps_hat = if sjj > 0.0 { (sjf / sjj).max(0.0) } else { 0.0 };
    let c_hat = points
        .iter()
        .map(|p| eps_hat * p.j - p.ding)
        .fold(f64::NEG_INFINITY, f64::max);
    let c0_fit = points
        .iter()
        .map(|p| p.sup_abs / (1.0 + p.j))
        .fold(0.0, f64::max);
    Ok(ProperScan {
        t,
        points,
        eps_hat,
        c_hat,
        c0_fit,
    })
}
