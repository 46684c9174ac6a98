use serde::{Deserialize, Serialize};

use crate::error::EnergyError;
use crate::regularization::RegularizedRhs;
use crate::sphere::{FieldKind, ScalarField, SphereGrid};

/// Grid, right-hand side data and dimension shared by all functionals.
#[derive(Clone, Debug)]
pub struct EnergyContext<'a> {
    pub grid: &'a SphereGrid,
    pub rhs: &'a RegularizedRhs,
    /// Complex dimension; the formulas below are the n = 1 specializations.
    pub n: usize,
    big_h0: ScalarField,
    volume: f64,
}

/// Functionals of one potential. `err_*` are differences against the N/2 grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    pub delta: f64,
    pub j: f64,
    pub i: f64,
    pub f0: f64,
    pub ding: f64,
    pub mabuchi: f64,
    pub f_delta: f64,
    pub err_j: f64,
    pub err_i: f64,
    pub err_f0: f64,
    pub err_ding: f64,
    pub err_mabuchi: f64,
    pub err_f_delta: f64,
}

impl<'a> EnergyContext<'a> {
    pub fn new(grid: &'a SphereGrid, rhs: &'a RegularizedRhs) -> Self {
        EnergyContext {
            grid,
            rhs,
            n: 1,
            big_h0: rhs.big_h0(),
            volume: grid.volume(),
        }
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn big_h0(&self) -> &ScalarField {
        &self.big_h0
    }

    fn check_dim(&self) -> Result<(), EnergyError> {
        if self.n != 1 {
            return Err(EnergyError::Dimension(self.n));
        }
        Ok(())
    }

    /// 1 + lap phi, checked positive.
    pub fn rho(&self, phi: &ScalarField) -> Result<ScalarField, EnergyError> {
        let rho = self
            .grid
            .laplacian(&phi.clone().with_kind(FieldKind::Smooth))
            .shift(1.0);
        let m = rho.min();
        if !(m > 0.0) {
            return Err(EnergyError::NotAdmissible(m));
        }
        Ok(rho)
    }

    pub fn integrate(&self, f: &ScalarField) -> Result<f64, EnergyError> {
        self.grid
            .integrate(f)
            .map_err(|e| EnergyError::Quadrature(e.to_string()))
    }

    /// (1/V) int f omega_0
    pub fn average(&self, f: &ScalarField) -> Result<f64, EnergyError> {
        Ok(self.integrate(f)? / self.volume)
    }

    /// Dirichlet energy int i d phi ^ dbar phi.
    pub fn dirichlet(&self, phi: &ScalarField) -> f64 {
        self.dirichlet_cross(phi, phi)
    }

    /// Cross term int i d phi ^ dbar psi, i.e. -(1/2) <phi, G psi> for the graph Laplacian G.
    pub fn dirichlet_cross(&self, phi: &ScalarField, psi: &ScalarField) -> f64 {
        let gpsi = self.grid.graph_laplacian(&psi.values);
        -0.5 * phi
            .values
            .iter()
            .zip(&gpsi)
            .map(|(a, b)| a * b)
            .sum::<f64>()
    }

    /// J(phi) = (1/(2V)) int i d phi ^ dbar phi  (n = 1)
    pub fn j(&self, phi: &ScalarField) -> Result<f64, EnergyError> {
        self.check_dim()?;
        Ok(self.dirichlet(phi) / (2.0 * self.volume))
    }

    /// I(phi) = (1/V) int phi (omega_0 - omega_phi)
    pub fn i(&self, phi: &ScalarField) -> Result<f64, EnergyError> {
        self.check_dim()?;
        let rho = self.rho(phi)?;
        let f = phi
            .zip_map(&rho, |p, r| p * (1.0 - r))
            .with_kind(FieldKind::Smooth);
        self.average(&f)
    }

    /// F^0(phi) = J(phi) - (1/V) int phi omega_0
    pub fn f0(&self, phi: &ScalarField) -> Result<f64, EnergyError> {
        Ok(self.j(phi)? - self.average(&phi.clone().with_kind(FieldKind::Smooth))?)
    }

    /// F^0 - (1/t) log((1/V) int e^(h - t phi) omega_0), with its t -> 0 limit.
    fn ding_with(&self, phi: &ScalarField, h: &ScalarField, t: f64) -> Result<f64, EnergyError> {
        let f0 = self.f0(phi)?;
        if t == 0.0 {
            let eh = h.map(f64::exp);
            let num = self.integrate(&eh.mul(phi))?;
            let den = self.integrate(&eh)?;
            return Ok(f0 + num / den);
        }
        let e = h.zip_map(phi, |hv, p| (hv - t * p).exp());
        let avg = self.average(&e)?;
        if !(avg > 0.0 && avg.is_finite()) {
            return Err(EnergyError::Quadrature(
                "non-positive exponential integral".into(),
            ));
        }
        Ok(f0 - avg.ln() / t)
    }

    /// Twisted Ding functional F_{omega_0, t} with the conic right-hand side H_0.
    pub fn ding(&self, phi: &ScalarField, t: f64) -> Result<f64, EnergyError> {
        self.ding_with(phi, &self.big_h0, t)
    }

    /// Approximating Ding functional F_{delta, t} with h_delta.
    pub fn f_delta(&self, phi: &ScalarField, delta: f64, t: f64) -> Result<f64, EnergyError> {
        let h = self
            .rhs
            .h_delta(self.grid, delta)
            .map_err(|e| EnergyError::Quadrature(e.to_string()))?;
        self.ding_with(phi, &h, t)
    }

    /// Twisted Mabuchi functional
    /// nu(phi) = (1/V) int log(omega_phi/omega_0) omega_phi + (1/V) int H_0 (omega_0 - omega_phi) - mu (I - J)(phi).
    pub fn mabuchi(&self, phi: &ScalarField, mu: f64) -> Result<f64, EnergyError> {
        let rho = self.rho(phi)?;
        let ent = self.average(&rho.map(|r| r * r.ln()))?;
        // H_0 is only log-singular against a bounded density; node weights keep this term
        // linear in phi, which the fitted polar tail is not.
        let pot = self.average(
            &self
                .big_h0
                .zip_map(&rho, |h, r| h * (1.0 - r))
                .with_kind(FieldKind::Smooth),
        )?;
        Ok(ent + pot - mu * (self.i(phi)? - self.j(phi)?))
    }

    /// All functionals, without error estimates.
    pub fn values(
        &self,
        phi: &ScalarField,
        t: f64,
        delta: f64,
        mu: f64,
    ) -> Result<EnergyReport, EnergyError> {
        let f_delta = if delta > 0.0 {
            self.f_delta(phi, delta, t)?
        } else {
            f64::NAN
        };
        Ok(EnergyReport {
            t,
            delta,
            j: self.j(phi)?,
            i: self.i(phi)?,
            f0: self.f0(phi)?,
            ding: self.ding(phi, t)?,
            mabuchi: self.mabuchi(phi, mu)?,
            f_delta,
            err_j: f64::NAN,
            err_i: f64::NAN,
            err_f0: f64::NAN,
            err_ding: f64::NAN,
            err_mabuchi: f64::NAN,
            err_f_delta: f64::NAN,
        })
    }
}

/// Energy evaluation with error estimates from the N/2 grid.
pub struct EnergyEstimator<'a> {
    pub fine: EnergyContext<'a>,
    coarse: Option<(SphereGrid, RegularizedRhs)>,
}

impl<'a> EnergyEstimator<'a> {
    pub fn new(grid: &'a SphereGrid, rhs: &'a RegularizedRhs) -> Self {
        let coarse = grid
            .coarsen()
            .and_then(|cg| RegularizedRhs::new(&cg, &rhs.twist).ok().map(|cr| (cg, cr)));
        EnergyEstimator {
            fine: EnergyContext::new(grid, rhs),
            coarse,
        }
    }

    pub fn report(
        &self,
        phi: &ScalarField,
        t: f64,
        delta: f64,
        mu: f64,
    ) -> Result<EnergyReport, EnergyError> {
        let mut r = self.fine.values(phi, t, delta, mu)?;
        if let Some((cg, cr)) = &self.coarse {
            let ctx = EnergyContext::new(cg, cr);
            if let Ok(c) = ctx.values(&self.fine.grid.restrict(phi), t, delta, mu) {
                r.err_j = (r.j - c.j).abs();
                r.err_i = (r.i - c.i).abs();
                r.err_f0 = (r.f0 - c.f0).abs();
                r.err_ding = (r.ding - c.ding).abs();
                r.err_mabuchi = (r.mabuchi - c.mabuchi).abs();
                r.err_f_delta = (r.f_delta - c.f_delta).abs();
            }
        }
        Ok(r)
    }
}
