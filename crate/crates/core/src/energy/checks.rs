use serde::Serialize;

use super::functionals::EnergyContext;
use crate::error::EnergyError;
use crate::solver::{newton_solve, SolveState, SolverConfig};
use crate::sphere::{FieldKind, ScalarField};

/// Data of the background omega_phi needed by base-changed functionals.
#[derive(Clone, Debug)]
pub struct BaseChange {
    pub rho: ScalarField,
    pub h: ScalarField,
    /// H_phi = h_phi - sum (1 - beta_i) log |S_i|^2 + c_phi
    pub big_h: ScalarField,
    pub c: f64,
}

impl<'a> EnergyContext<'a> {
    /// Solves lap h_phi = h0 source - lap log(rho_phi) - t (rho_phi - 1) and normalizes
    /// (1/V) int e^(H_phi) omega_phi = 1.
    pub fn base_change(&self, phi: &ScalarField, t: f64) -> Result<BaseChange, EnergyError> {
        let rho = self.rho(phi)?;
        let lap_log = self.grid.laplacian(&rho.map(f64::ln));
        let src = self.rhs.twist.h0_source(self.grid);
        let f = ScalarField::smooth(
            (0..rho.len())
                .map(|i| src.values[i] - lap_log.values[i] - t * (rho.values[i] - 1.0))
                .collect(),
        );
        let (h, _) = self.grid.poisson(&f).map_err(EnergyError::Quadrature)?;
        let base = h.sub(&self.rhs.log_divisor());
        let avg = self.average(&base.zip_map(&rho, |b, r| b.exp() * r))?;
        let c = -avg.ln();
        Ok(BaseChange {
            big_h: base.shift(c),
            h,
            rho,
            c,
        })
    }

    /// F_{omega_phi, t}(eta)
    pub fn ding_at(&self, bc: &BaseChange, eta: &ScalarField, t: f64) -> Result<f64, EnergyError> {
        let lin = self.average(&eta.mul(&bc.rho).with_kind(FieldKind::Smooth))?;
        if t == 0.0 {
            let eh = bc.big_h.map(f64::exp).mul(&bc.rho);
            return Ok(self.j(eta)? - lin + self.integrate(&eh.mul(eta))? / self.integrate(&eh)?);
        }
        let e = bc.big_h.zip_map(eta, |h, x| (h - t * x).exp()).mul(&bc.rho);
        Ok(self.j(eta)? - lin - self.average(&e)?.ln() / t)
    }

    /// F^0_{omega_phi}(eta)
    pub fn f0_at(&self, bc: &BaseChange, eta: &ScalarField) -> Result<f64, EnergyError> {
        Ok(self.j(eta)? - self.average(&eta.mul(&bc.rho).with_kind(FieldKind::Smooth))?)
    }

    /// nu_{omega_phi, t}(eta)
    pub fn mabuchi_at(
        &self,
        bc: &BaseChange,
        eta: &ScalarField,
        t: f64,
    ) -> Result<f64, EnergyError> {
        let lap_eta = self
            .grid
            .laplacian(&eta.clone().with_kind(FieldKind::Smooth));
        let rho2 = bc.rho.add(&lap_eta);
        if !(rho2.min() > 0.0) {
            return Err(EnergyError::NotAdmissible(rho2.min()));
        }
        let ent = self.average(&rho2.zip_map(&bc.rho, |r2, r1| r2 * (r2 / r1).ln()))?;
        let pot = self.average(
            &bc.big_h
                .zip_map(&lap_eta, |h, l| -h * l)
                .with_kind(FieldKind::Smooth),
        )?;
        let i_rel = self.average(
            &eta.zip_map(&lap_eta, |x, l| -x * l)
                .with_kind(FieldKind::Smooth),
        )?;
        Ok(ent + pot - t * (i_rel - self.j(eta)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CocycleDefects {
    pub ding: f64,
    pub f0: f64,
    pub mabuchi: f64,
}

impl CocycleDefects {
    pub fn max(&self) -> f64 {
        self.ding.max(self.f0).max(self.mabuchi)
    }
}

/// |F(phi) + F_{omega_phi}(psi - phi) - F(psi)| for the Ding, F^0 and Mabuchi functionals.
pub fn cocycle_defect(
    ctx: &EnergyContext,
    phi: &ScalarField,
    psi: &ScalarField,
    t: f64,
) -> Result<CocycleDefects, EnergyError> {
    let bc = ctx.base_change(phi, t)?;
    let eta = psi.sub(phi);
    let ding = (ctx.ding(phi, t)? + ctx.ding_at(&bc, &eta, t)? - ctx.ding(psi, t)?).abs();
    let f0 = (ctx.f0(phi)? + ctx.f0_at(&bc, &eta)? - ctx.f0(psi)?).abs();
    let mabuchi =
        (ctx.mabuchi(phi, t)? + ctx.mabuchi_at(&bc, &eta, t)? - ctx.mabuchi(psi, t)?).abs();
    Ok(CocycleDefects { ding, f0, mabuchi })
}

/// |F_t(phi + kappa) - F_t(phi)|
pub fn gauge_defect(
    ctx: &EnergyContext,
    phi: &ScalarField,
    kappa: f64,
    t: f64,
) -> Result<f64, EnergyError> {
    Ok((ctx.ding(&phi.shift(kappa), t)? - ctx.ding(phi, t)?).abs())
}

/// (s, J(s phi), s^2 J(phi)) for each sample s.
pub fn scaling_check(
    ctx: &EnergyContext,
    phi: &ScalarField,
    samples: &[f64],
) -> Result<Vec<(f64, f64, f64)>, EnergyError> {
    let j1 = ctx.j(phi)?;
    let p = (ctx.n as f64 + 1.0) / ctx.n as f64;
    samples
        .iter()
        .map(|&s| Ok((s, ctx.j(&phi.scale(s))?, s.powf(p) * j1)))
        .collect()
}

/// nu(phi) - mu F(phi) - (1/V) int H_0 omega_0, a Jensen gap.
pub fn jensen_gap(ctx: &EnergyContext, phi: &ScalarField, mu: f64) -> Result<f64, EnergyError> {
    let avg_h = ctx.average(ctx.big_h0())?;
    Ok(ctx.mabuchi(phi, mu)? - mu * ctx.ding(phi, mu)? - avg_h)
}

/// Left and right side of mu F(phi) + (1/V) int H_0 >= nu(psi), with psi the t = 0
/// solution of omega_psi = e^(h_delta - mu phi + const) omega_0.
pub fn mabuchi_ding_bound(
    ctx: &EnergyContext,
    phi: &ScalarField,
    mu: f64,
    delta: f64,
    cfg: &SolverConfig,
) -> Result<(f64, f64), EnergyError> {
    let h = ctx
        .rhs
        .h_delta(ctx.grid, delta)
        .map_err(|e| EnergyError::Quadrature(e.to_string()))?;
    let g = h.axpy(-mu, phi);
    let norm = ctx.volume().ln() - ctx.integrate(&g.map(f64::exp))?.ln();
    let g = g.shift(norm);
    let psi = newton_solve(ctx.grid, &g, 0.0, &ScalarField::zeros(ctx.grid.len()), cfg)?;
    let lhs = mu * ctx.ding(phi, mu)? + ctx.average(ctx.big_h0())?;
    let rhs = ctx.mabuchi(&psi.phi, mu)?;
    Ok((lhs, rhs))
}

/// One row of the path identity: (t, -int_0^t (I - J) ds, t F^0(phi_t)).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathPoint {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Trapezoid integral of -(I - J) along the trace against t F^0(phi_t).
pub fn path_identity(
    ctx: &EnergyContext,
    trace: &[SolveState],
) -> Result<Vec<PathPoint>, EnergyError> {
    if trace.len() < 3 {
        return Err(EnergyError::CoarseTrace(format!("{} states", trace.len())));
    }
    let mut out = Vec::with_capacity(trace.len());
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for s in trace {
        let g = ctx.i(&s.phi)? - ctx.j(&s.phi)?;
        if let Some((t0, g0)) = prev {
            acc -= 0.5 * (s.t - t0) * (g + g0);
        }
        prev = Some((s.t, g));
        out.push(PathPoint {
            t: s.t,
            lhs: acc,
            rhs: s.t * ctx.f0(&s.phi)?,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinimizerReport {
    pub f_star: f64,
    /// min over the family of F(phi) - F(phi_star)
    pub min_difference: f64,
    pub differences: Vec<f64>,
}

pub fn minimizer_check(
    ctx: &EnergyContext,
    phi_star: &ScalarField,
    family: &[ScalarField],
    mu: f64,
) -> Result<MinimizerReport, EnergyError> {
    let f_star = ctx.ding(phi_star, mu)?;
    let differences: Vec<f64> = family
        .iter()
        .map(|p| Ok(ctx.ding(p, mu)? - f_star))
        .collect::<Result<_, EnergyError>>()?;
    let min_difference = differences.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(MinimizerReport {
        f_star,
        min_difference,
        differences,
    })
}

/// Values of F(phi_star + eps eta) on the given eps samples.
pub fn variation_profile(
    ctx: &EnergyContext,
    phi_star: &ScalarField,
    eta: &ScalarField,
    eps: &[f64],
    mu: f64,
) -> Result<Vec<(f64, f64)>, EnergyError> {
    eps.iter()
        .map(|&e| Ok((e, ctx.ding(&phi_star.axpy(e, eta), mu)?)))
        .collect()
}

/// Centered difference of J along eta against -(1/V) int eta (omega_phi - omega_0).
pub fn first_variation_j(
    ctx: &EnergyContext,
    phi: &ScalarField,
    eta: &ScalarField,
    step: f64,
) -> Result<(f64, f64), EnergyError> {
    let fd = (ctx.j(&phi.axpy(step, eta))? - ctx.j(&phi.axpy(-step, eta))?) / (2.0 * step);
    let rho = ctx.rho(phi)?;
    let formula = -ctx.average(
        &eta.zip_map(&rho, |e, r| e * (r - 1.0))
            .with_kind(FieldKind::Smooth),
    )?;
    Ok((fd, formula))
}

/// t F_t(phi) = t F^0(phi) - log((1/V) int e^(H_0 - t phi)), defined at t = 0 as well.
pub fn t_ding(ctx: &EnergyContext, phi: &ScalarField, t: f64) -> Result<f64, EnergyError> {
    let e = ctx.big_h0().zip_map(phi, |h, p| (h - t * p).exp());
    Ok(t * ctx.f0(phi)? - ctx.average(&e)?.ln())
}

/// mu F_mu(phi) - [(1 - theta) mu0 F_mu0(phi) + theta mu1 F_mu1(phi)], nonnegative by concavity.
pub fn interpolation_slack(
    ctx: &EnergyContext,
    phi: &ScalarField,
    mu0: f64,
    mu1: f64,
    theta: f64,
) -> Result<f64, EnergyError> {
    let mu = (1.0 - theta) * mu0 + theta * mu1;
    Ok(t_ding(ctx, phi, mu)?
        - (1.0 - theta) * t_ding(ctx, phi, mu0)?
        - theta * t_ding(ctx, phi, mu1)?)
}

/// F_{delta,t}(phi) - F_t(phi) - (c - c_delta)/t, nonnegative.
pub fn approximation_slack(
    ctx: &EnergyContext,
    phi: &ScalarField,
    delta: f64,
    t: f64,
) -> Result<f64, EnergyError> {
    let c_delta = ctx
        .rhs
        .normalize_constant(ctx.grid, delta)
        .map_err(|e| EnergyError::Quadrature(e.to_string()))?;
    Ok(ctx.f_delta(phi, delta, t)? - ctx.ding(phi, t)? - (ctx.rhs.c - c_delta) / t)
}

/// J relative to the background omega_0 + i d dbar chi, from the defining path integral
/// J_omega(phi) = int_0^1 (1/V) int phi (omega - omega_{s phi}) ds (two-point Gauss rule, exact here).
pub fn j_background(
    ctx: &EnergyContext,
    phi: &ScalarField,
    chi: &ScalarField,
) -> Result<f64, EnergyError> {
    let lap_chi = ctx.grid.laplacian(chi);
    let lap_phi = ctx
        .grid
        .laplacian(&phi.clone().with_kind(FieldKind::Smooth));
    let nodes = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
    let mut total = 0.0;
    for s in nodes {
        let f = ScalarField::smooth(
            (0..phi.len())
                .map(|i| {
                    let omega = 1.0 + lap_chi.values[i];
                    let omega_s = omega + s * lap_phi.values[i];
                    phi.values[i] * (omega - omega_s)
                })
                .collect(),
        );
        total += 0.5 * ctx.average(&f)?;
    }
    Ok(total)
}
