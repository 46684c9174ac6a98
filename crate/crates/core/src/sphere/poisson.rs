use num_complex::Complex64;
use rayon::prelude::*;

use super::field::ScalarField;
use super::grid::SphereGrid;

/// Tridiagonal solve with partial pivoting (LAPACK gtsv). `dl[i]` is entry (i+1, i).
pub fn solve_tridiagonal(
    mut dl: Vec<f64>,
    mut d: Vec<f64>,
    mut du: Vec<f64>,
    b: &mut [Complex64],
) -> Result<(), String> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return Err(format!("zero pivot at row {i}"));
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            let bi = b[i];
            b[i + 1] -= bi * fact;
            dl[i] = 0.0;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = 0.0;
            }
            du[i] = temp;
            b.swap(i, i + 1);
            let bi = b[i];
            b[i + 1] -= bi * fact;
        }
    }
    if d[n - 1] == 0.0 {
        return Err("singular tridiagonal system".into());
    }
    b[n - 1] /= d[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - b[n - 1] * du[n - 2]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - b[i + 1] * du[i] - b[i + 2] * dl[i]) / d[i];
    }
    if b.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err("non-finite solution".into());
    }
    Ok(())
}

impl SphereGrid {
    /// Solves (G + diag(d)) v = r, where G is the graph Laplacian and d depends on the row only.
    ///
    /// FFT in phi and one pivoted tridiagonal solve per Fourier mode. With `pin`, the
    /// constant mode is fixed by v = 0 on the first row (for d = 0, compatible r).
    pub fn solve_rows(&self, d: &[f64], rhs: &[f64], pin: bool) -> Result<Vec<f64>, String> {
        let n = self.n_phi();
        let m = self.n_u();
        assert_eq!(d.len(), m);
        assert_eq!(rhs.len(), n * m);
        let mut spec: Vec<Complex64> = rhs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        spec.par_chunks_mut(n).for_each(|row| self.fft.process(row));

        let h = 2.0 * std::f64::consts::PI / n as f64;
        let modes: Vec<Result<Vec<Complex64>, String>> = (0..=n / 2)
            .into_par_iter()
            .map(|q| {
                let sigma = 2.0 - 2.0 * (h * q as f64).cos();
                let mut dl = vec![1.0; m - 1];
                let mut du = vec![1.0; m - 1];
                let mut dd: Vec<f64> = (0..m)
                    .map(|j| {
                        let nb = if j == 0 || j + 1 == m {
                            1.0 - self.dtn_factor(q)
                        } else {
                            2.0
                        };
                        -nb - sigma + d[j]
                    })
                    .collect();
                let mut b: Vec<Complex64> = (0..m).map(|j| spec[j * n + q]).collect();
                if q == 0 && pin {
                    dd[0] = 1.0;
                    du[0] = 0.0;
                    b[0] = Complex64::new(0.0, 0.0);
                }
                if m == 1 {
                    dl.clear();
                    du.clear();
                }
                solve_tridiagonal(dl, dd, du, &mut b)?;
                Ok(b)
            })
            .collect();

        let mut out = vec![Complex64::new(0.0, 0.0); n * m];
        for (q, col) in modes.into_iter().enumerate() {
            let col = col?;
            for j in 0..m {
                let mut v = col[j];
                if q == 0 || 2 * q == n {
                    v.im = 0.0;
                }
                out[j * n + q] = v;
                if q != 0 && 2 * q != n {
                    out[j * n + n - q] = v.conj();
                }
            }
        }
        out.par_chunks_mut(n).for_each(|row| self.ifft.process(row));
        let scale = 1.0 / n as f64;
        Ok(out.iter().map(|c| c.re * scale).collect())
    }

    /// Mean-zero solution of lap v = f after removing the weighted mean of f.
    ///
    /// Returns (v, mean of f). The mean is the compatibility defect.
    pub fn poisson(&self, f: &ScalarField) -> Result<(ScalarField, f64), String> {
        let vol = self.volume();
        let mean = self.sum_weighted(&f.values) / vol;
        let n = self.n_phi();
        let rhs: Vec<f64> = (0..self.len())
            .map(|i| 2.0 * self.row_weight(i / n) * (f.values[i] - mean))
            .collect();
        let zeros = vec![0.0; self.n_u()];
        let v = self.solve_rows(&zeros, &rhs, true)?;
        let vm = self.sum_weighted(&v) / vol;
        Ok((
            ScalarField::smooth(v.iter().map(|x| x - vm).collect()),
            mean,
        ))
    }
}

/// Restarted GMRES for (G + diag(d)) x = b, right-preconditioned by the phi-averaged operator.
pub fn gmres_rows(
    grid: &SphereGrid,
    d: &[f64],
    b: &[f64],
    rtol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<Vec<f64>, String> {
    let n = grid.n_phi();
    let m = grid.n_u();
    let dbar: Vec<f64> = (0..m)
        .map(|j| d[j * n..(j + 1) * n].iter().sum::<f64>() / n as f64)
        .collect();
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = grid.graph_laplacian(x);
        y.iter_mut()
            .zip(x)
            .zip(d)
            .for_each(|((yi, xi), di)| *yi += di * xi);
        y
    };
    let precond = |x: &[f64]| grid.solve_rows(&dbar, x, false);
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(vec![0.0; b.len()]);
    }
    let mut x = vec![0.0; b.len()];
    let mut iters = 0;
    let mut last_beta = f64::INFINITY;
    loop {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = dot(&r, &r).sqrt();
        if beta <= rtol * bnorm {
            return Ok(x);
        }
        if iters >= max_iter || beta >= 0.5 * last_beta {
            // no progress over a restart cycle: accept a roundoff-level residual
            if beta <= 1e-8 * bnorm {
                return Ok(x);
            }
            return Err(format!(
                "GMRES stalled at relative residual {:e}",
                beta / bnorm
            ));
        }
        last_beta = beta;
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::new();
        let mut hm = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            iters += 1;
            let zk = precond(&v[k])?;
            let mut w = apply(&zk);
            z.push(zk);
            for i in 0..=k {
                let hik = dot(&w, &v[i]);
                hm[i][k] = hik;
                w.iter_mut().zip(&v[i]).for_each(|(wj, vj)| *wj -= hik * vj);
            }
            let wn = dot(&w, &w).sqrt();
            hm[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * hm[i][k] + sn[i] * hm[i + 1][k];
                hm[i + 1][k] = -sn[i] * hm[i][k] + cs[i] * hm[i + 1][k];
                hm[i][k] = t;
            }
            let den = hm[k][k].hypot(hm[k + 1][k]);
            cs[k] = hm[k][k] / den;
            sn[k] = hm[k + 1][k] / den;
            hm[k][k] = den;
            hm[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() <= rtol * bnorm || wn == 0.0 || iters >= max_iter {
                break;
            }
            v.push(w.iter().map(|wi| wi / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|l| hm[i][l] * y[l]).sum();
            y[i] = (g[i] - s) / hm[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            x.iter_mut().zip(&z[i]).for_each(|(xj, zj)| *xj += yi * zj);
        }
    }
}
