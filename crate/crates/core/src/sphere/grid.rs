use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::cones::{ConeData, Point};
use super::field::{Density, FieldKind, ScalarField};
use crate::error::GridError;

pub const MIN_RESOLUTION: usize = 16;
pub const DEFAULT_DEPTH: f64 = 5.0;
pub const DEFAULT_OVERLAP: f64 = 2.0;

/// Stereographic chart: `Z` is centred at z = 0, `W` at z = infinity (w = 1/z).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    Z,
    W,
}

/// Rows of the grid that form geometrically graded annuli around a polar cone.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementZone {
    pub cone: usize,
    pub chart: Chart,
    /// Row indices, ordered from the cone outward.
    pub rows: Vec<usize>,
    pub r_min: f64,
    pub r_max: f64,
}

/// Cell-centred grid on the cylinder u = log|z|, phi = arg z, with square cells.
///
/// In these coordinates the FS form is du dphi / (2 cosh^2 u); each chart is a polar
/// grid whose radii are graded geometrically toward its pole. The two end rows carry
/// the exact FS area of the polar caps beyond the truncation depth.
#[derive(Clone)]
pub struct SphereGrid {
    n_phi: usize,
    n_u: usize,
    h: f64,
    half_length: f64,
    r_overlap: f64,
    u: Vec<f64>,
    cell: Vec<f64>,
    weight: Vec<f64>,
    cones: ConeData,
    zones: Vec<Option<RefinementZone>>,
    pub(crate) fft: Arc<dyn Fft<f64>>,
    pub(crate) ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereGrid")
            .field("n_phi", &self.n_phi)
            .field("n_u", &self.n_u)
            .field("h", &self.h)
            .field("half_length", &self.half_length)
            .field("r_overlap", &self.r_overlap)
            .field("cones", &self.cones)
            .finish()
    }
}

impl SphereGrid {
    pub fn build(n: usize, cones: ConeData, r_overlap: f64) -> Result<Self, GridError> {
        Self::with_depth(n, cones, r_overlap, DEFAULT_DEPTH)
    }

    /// `depth` is the truncation of |log|z|| on each side.
    pub fn with_depth(
        n: usize,
        cones: ConeData,
        r_overlap: f64,
        depth: f64,
    ) -> Result<Self, GridError> {
        if n < MIN_RESOLUTION {
            return Err(GridError::ResolutionTooSmall(n));
        }
        if !(depth.is_finite() && depth > 0.0) {
            return Err(GridError::BadDepth(depth));
        }
        cones.validate()?;
        let h = 2.0 * PI / n as f64;
        // a multiple of 4 rows so that the N/2 grid is an exact 2x2 agglomeration
        let n_u = 4 * (depth / (2.0 * h)).ceil() as usize;
        let half_length = n_u as f64 * h / 2.0;
        if !(r_overlap > 1.0 && r_overlap.ln() < half_length) {
            return Err(GridError::BadOverlap(r_overlap));
        }
        let u: Vec<f64> = (0..n_u)
            .map(|j| -half_length + (j as f64 + 0.5) * h)
            .collect();
        let cell: Vec<f64> = u
            .iter()
            .map(|&x| h * h / (2.0 * x.cosh().powi(2)))
            .collect();
        let mut weight = cell.clone();
        let cap = PI * (1.0 - half_length.tanh()) / n as f64;
        weight[0] += cap;
        weight[n_u - 1] += cap;

        let zones = cones
            .cones
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let r_max = 0.5f64;
                let r_min = (-half_length).exp();
                if c.point.is_zero() {
                    let rows = (0..n_u).filter(|&j| u[j] <= r_max.ln()).collect();
                    Some(RefinementZone {
                        cone: i,
                        chart: Chart::Z,
                        rows,
                        r_min,
                        r_max,
                    })
                } else if c.point.is_infinity() {
                    let rows = (0..n_u).rev().filter(|&j| -u[j] <= r_max.ln()).collect();
                    Some(RefinementZone {
                        cone: i,
                        chart: Chart::W,
                        rows,
                        r_min,
                        r_max,
                    })
                } else {
                    None
                }
            })
            .collect();

        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        Ok(SphereGrid {
            n_phi: n,
            n_u,
            h,
            half_length,
            r_overlap,
            u,
            cell,
            weight,
            cones,
            zones,
            fft,
            ifft,
        })
    }

    /// Grid of resolution N/2 whose cells are exact 2x2 unions of this grid's cells.
    pub fn coarsen(&self) -> Option<SphereGrid> {
        if self.n_phi % 2 != 0 || self.n_phi / 2 < MIN_RESOLUTION {
            return None;
        }
        let g = SphereGrid::with_depth(
            self.n_phi / 2,
            self.cones.clone(),
            self.r_overlap,
            self.half_length * (1.0 - 1e-12),
        )
        .ok()?;
        (g.n_u * 2 == self.n_u).then_some(g)
    }

    /// Restriction to [`Self::coarsen`] by averaging each 2x2 block.
    pub fn restrict(&self, f: &ScalarField) -> ScalarField {
        let n = self.n_phi;
        let nc = n / 2;
        let mc = self.n_u / 2;
        let mut v = Vec::with_capacity(nc * mc);
        for j in 0..mc {
            for k in 0..nc {
                let a = self.index(2 * j, 2 * k);
                let b = self.index(2 * j + 1, 2 * k);
                v.push(0.25 * (f.values[a] + f.values[a + 1] + f.values[b] + f.values[b + 1]));
            }
        }
        ScalarField {
            values: v,
            kind: f.kind,
        }
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn len(&self) -> usize {
        self.n_phi * self.n_u
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn depth(&self) -> f64 {
        self.half_length
    }

    pub fn r_overlap(&self) -> f64 {
        self.r_overlap
    }

    pub fn cones(&self) -> &ConeData {
        &self.cones
    }

    pub fn zones(&self) -> &[Option<RefinementZone>] {
        &self.zones
    }

    pub fn index(&self, j: usize, k: usize) -> usize {
        j * self.n_phi + k
    }

    pub fn row_of(&self, idx: usize) -> usize {
        idx / self.n_phi
    }

    pub fn col_of(&self, idx: usize) -> usize {
        idx % self.n_phi
    }

    pub fn u_rows(&self) -> &[f64] {
        &self.u
    }

    pub fn u(&self, j: usize) -> f64 {
        self.u[j]
    }

    pub fn phi(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    pub fn z(&self, idx: usize) -> Complex64 {
        let (j, k) = (self.row_of(idx), self.col_of(idx));
        Complex64::from_polar(self.u[j].exp(), self.phi(k))
    }

    /// Embedding coordinates (x1, x2, x3) of a node on the unit sphere.
    pub fn x(&self, idx: usize) -> [f64; 3] {
        let (j, k) = (self.row_of(idx), self.col_of(idx));
        let sech = 1.0 / self.u[j].cosh();
        let p = self.phi(k);
        [p.cos() * sech, p.sin() * sech, -self.u[j].tanh()]
    }

    /// Quadrature weight of a row's nodes (cap area included at the end rows).
    pub fn row_weight(&self, j: usize) -> f64 {
        self.weight[j]
    }

    pub fn row_weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn cell_weight(&self, j: usize) -> f64 {
        self.cell[j]
    }

    pub fn weight(&self, idx: usize) -> f64 {
        self.weight[self.row_of(idx)]
    }

    /// Discrete total area; equals 2 pi up to the strip quadrature error.
    pub fn volume(&self) -> f64 {
        self.weight.iter().map(|w| w * self.n_phi as f64).sum()
    }

    pub fn field(&self, f: impl Fn(usize) -> f64 + Sync + Send) -> ScalarField {
        ScalarField::smooth((0..self.len()).into_par_iter().map(f).collect())
    }

    pub fn field_z(&self, f: impl Fn(Complex64) -> f64 + Sync + Send) -> ScalarField {
        self.field(|i| f(self.z(i)))
    }

    /// Field depending only on u = log|z|.
    pub fn field_u(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        let mut v = Vec::with_capacity(self.len());
        for &u in &self.u {
            let val = f(u);
            v.extend(std::iter::repeat(val).take(self.n_phi));
        }
        ScalarField::smooth(v)
    }

    pub fn check(&self, f: &ScalarField) -> Result<(), GridError> {
        if f.len() != self.len() {
            return Err(GridError::ShapeMismatch {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    fn row_sum(&self, v: &[f64], j: usize) -> f64 {
        v[j * self.n_phi..(j + 1) * self.n_phi].iter().sum()
    }

    /// Plain quadrature sum_i w_i f_i with a fixed reduction order.
    pub fn sum_weighted(&self, v: &[f64]) -> f64 {
        let rows: Vec<f64> = (0..self.n_u)
            .into_par_iter()
            .map(|j| self.weight[j] * self.row_sum(v, j))
            .collect();
        rows.iter().sum()
    }

    /// Integral of f against the FS form.
    ///
    /// Smooth fields use the node weights. Singular fields replace the polar cap
    /// weights by an exponential tail fitted to the two outermost rows.
    pub fn integrate(&self, f: &ScalarField) -> Result<f64, GridError> {
        self.check(f)?;
        if !f.all_finite() {
            return Err(GridError::NotIntegrable("non-finite node value".into()));
        }
        match f.kind {
            FieldKind::Smooth => Ok(self.sum_weighted(&f.values)),
            FieldKind::Singular => {
                let m = self.n_u;
                let rows: Vec<f64> = (0..m)
                    .into_par_iter()
                    .map(|j| self.cell[j] * self.row_sum(&f.values, j))
                    .collect();
                let body: f64 = rows.iter().sum();
                let south = self.tail(rows[0], rows[1], rows[2])?;
                let north = self.tail(rows[m - 1], rows[m - 2], rows[m - 3])?;
                Ok(body + south + north)
            }
        }
    }

    /// Tail beyond the end row, S0 e^(-p h/2)/(p h), with the decay rate p taken from the
    /// next two rows (the end row itself carries lumped cap values).
    fn tail(&self, outer: f64, r1: f64, r2: f64) -> Result<f64, GridError> {
        if outer == 0.0 {
            return Ok(0.0);
        }
        let p = if r1.signum() == r2.signum() && r1 != 0.0 && r2 != 0.0 {
            (r2 / r1).ln() / self.h
        } else {
            f64::NAN
        };
        if !p.is_finite() {
            // oscillating row sums: fall back on the FS decay rate
            return Ok(outer * (-self.h).exp() / (2.0 * self.h));
        }
        if p <= 0.0 {
            return Err(GridError::NotIntegrable(format!(
                "tail exponent {p:.3} at a pole"
            )));
        }
        Ok(outer * (-p * self.h / 2.0).exp() / (p * self.h))
    }

    pub fn mean(&self, f: &ScalarField) -> Result<f64, GridError> {
        Ok(self.integrate(f)? / self.volume())
    }

    /// Discrete Dirichlet-to-Neumann factor e^(-kappa h) - 1 of Fourier mode q on an end row,
    /// where e^(kappa h) is the decaying root of a - 2 + 1/a = sigma_q.
    pub fn dtn_factor(&self, q: usize) -> f64 {
        let sigma = 2.0 - 2.0 * (self.h * q as f64).cos();
        let a = 1.0 + 0.5 * sigma + (sigma + 0.25 * sigma * sigma).sqrt();
        1.0 / a - 1.0
    }

    /// Graph Laplacian: sum over the four neighbours of (v_j - v_i). Past the end rows the
    /// constant mode has no flux and the others continue as discrete harmonic decay.
    pub fn graph_laplacian(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n_phi;
        let m = self.n_u;
        let mut out = vec![0.0; v.len()];
        out.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for k in 0..n {
                let i = j * n + k;
                let c = v[i];
                let kp = if k + 1 == n { j * n } else { i + 1 };
                let km = if k == 0 { j * n + n - 1 } else { i - 1 };
                let mut s = (v[kp] - c) + (v[km] - c);
                if j + 1 < m {
                    s += v[i + n] - c;
                }
                if j > 0 {
                    s += v[i - n] - c;
                }
                row[k] = s;
            }
        });
        for j in [0, m - 1] {
            let mut row: Vec<Complex64> = v[j * n..(j + 1) * n]
                .iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect();
            self.fft.process(&mut row);
            for (q, c) in row.iter_mut().enumerate() {
                *c *= self.dtn_factor(q.min(n - q)) / n as f64;
            }
            self.ifft.process(&mut row);
            out[j * n..(j + 1) * n]
                .iter_mut()
                .zip(&row)
                .for_each(|(o, c)| *o += c.re);
        }
        out
    }

    /// Complex Laplacian of the FS form: i d dbar f = (lap f) omega_0.
    ///
    /// Finite-volume scheme; exactly conservative, sum_i w_i (lap f)_i = 0.
    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        let mut g = self.graph_laplacian(&f.values);
        let n = self.n_phi;
        g.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            let s = 0.5 / self.weight[j];
            row.iter_mut().for_each(|x| *x *= s);
        });
        ScalarField {
            values: g,
            kind: f.kind,
        }
    }

    /// FS section norm of cone i at every node, including its norm twist.
    pub fn section_norm_sq(&self, i: usize) -> ScalarField {
        let cone = &self.cones.cones[i];
        let twist = cone.twist;
        let point = cone.point;
        self.field(|idx| {
            let s0 = self.fs_norm_at(&point, idx);
            if twist.is_zero() {
                s0
            } else {
                s0 * (-twist.value(&self.x(idx))).exp()
            }
        })
    }

    pub fn section_norm_sq_at(&self, i: usize, idx: usize) -> f64 {
        let cone = &self.cones.cones[i];
        let s0 = self.fs_norm_at(&cone.point, idx);
        s0 * (-cone.twist.value(&self.x(idx))).exp()
    }

    fn fs_norm_at(&self, a: &Point, idx: usize) -> f64 {
        let u = self.u[self.row_of(idx)];
        match *a {
            Point::Infinity => 0.5 * (1.0 - u.tanh()),
            _ if a.is_zero() => 0.5 * (1.0 + u.tanh()),
            Point::Finite { re, im } => {
                let z = self.z(idx);
                let a = Complex64::new(re, im);
                (z - a).norm_sqr() / ((1.0 + z.norm_sqr()) * (1.0 + a.norm_sqr()))
            }
        }
    }

    /// Density of the curvature form -i d dbar log |S_i|^2 relative to the FS form.
    pub fn curvature_form(&self, i: usize) -> Density {
        let twist = self.cones.cones[i].twist;
        Density(self.field(|idx| 1.0 + twist.laplacian(&self.x(idx))))
    }

    /// Density of i dS ^ d(S bar) / |S|^2 (Chern connection, norm of cone i) relative to omega_0.
    pub fn ds_density(&self, i: usize) -> ScalarField {
        let cone = &self.cones.cones[i];
        let twist = cone.twist;
        let point = cone.point;
        self.field(|idx| {
            let z = self.z(idx);
            let zb = z.conj();
            let q = 1.0 + z.norm_sqr();
            let dlog = match point {
                Point::Infinity => -zb / q,
                Point::Finite { re, im } => {
                    let a = Complex64::new(re, im);
                    1.0 / (z - a) - zb / q
                }
            } - twist.dz(z);
            let s = self.section_norm_sq_at(i, idx);
            s * dlog.norm_sqr() * q * q
        })
    }

    /// Whether every cone lies on the polar axis and every twist is axisymmetric.
    pub fn is_axisymmetric(&self) -> bool {
        self.cones
            .cones
            .iter()
            .all(|c| c.is_polar() && c.twist.is_axisymmetric())
    }

    /// Rows sampled by a chart (|coordinate| <= r_overlap), ordered from its pole.
    pub fn chart_rows(&self, chart: Chart) -> Vec<usize> {
        let l = self.r_overlap.ln();
        match chart {
            Chart::Z => (0..self.n_u).filter(|&j| self.u[j] <= l).collect(),
            Chart::W => (0..self.n_u).rev().filter(|&j| -self.u[j] <= l).collect(),
        }
    }

    /// Chart coordinate of a node.
    pub fn chart_coordinate(&self, chart: Chart, idx: usize) -> Complex64 {
        match chart {
            Chart::Z => self.z(idx),
            Chart::W => 1.0 / self.z(idx),
        }
    }

    /// Polar indices (radial from the chart's pole, angular) of a node.
    pub fn polar_index(&self, chart: Chart, idx: usize) -> (usize, usize) {
        let (j, k) = (self.row_of(idx), self.col_of(idx));
        match chart {
            Chart::Z => (j, k),
            Chart::W => (self.n_u - 1 - j, (self.n_phi - k) % self.n_phi),
        }
    }

    pub fn node_from_polar(&self, chart: Chart, radial: usize, angular: usize) -> Option<usize> {
        if radial >= self.n_u || angular >= self.n_phi {
            return None;
        }
        Some(match chart {
            Chart::Z => self.index(radial, angular),
            Chart::W => self.index(self.n_u - 1 - radial, (self.n_phi - angular) % self.n_phi),
        })
    }

    /// Node mask of points whose modulus lies in [r_lo, r_hi].
    pub fn annulus_mask(&self, r_lo: f64, r_hi: f64) -> Vec<bool> {
        (0..self.len())
            .map(|i| {
                let u = self.u[self.row_of(i)];
                u >= r_lo.ln() - 1e-12 && u <= r_hi.ln() + 1e-12
            })
            .collect()
    }

    /// Node mask excluding the two end rows (the lumped cap cells).
    pub fn interior_mask(&self) -> Vec<bool> {
        (0..self.len())
            .map(|i| {
                let j = self.row_of(i);
                j > 0 && j + 1 < self.n_u
            })
            .collect()
    }

    /// Node mask at chordal half-distance^2 at least `s_min` from every cone.
    pub fn away_from_cones(&self, s_min: f64) -> Vec<bool> {
        (0..self.len())
            .map(|i| {
                (0..self.cones.len())
                    .all(|c| self.fs_norm_at(&self.cones.cones[c].point, i) >= s_min)
            })
            .collect()
    }
}
