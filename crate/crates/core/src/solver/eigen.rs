use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SolverError;
use crate::sphere::{ScalarField, SphereGrid};

const SEED: u64 = 0x1a3b_5c7d;

/// Block size of the subspace iteration. The discrete FS eigenvalue 2 splits into close
/// m = 0 and m = +-1 values, so a single vector converges too slowly.
const BLOCK: usize = 5;

/// Smallest nonzero eigenvalue of -lap_phi = -lap / (1 + lap phi) by block inverse iteration.
///
/// Generalized form: -G v = lambda B v with B = diag(2 w rho), constants projected out
/// B-orthogonally; Rayleigh-Ritz on the block after every solve.
pub fn estimate_lambda1(grid: &SphereGrid, phi: &ScalarField) -> Result<f64, SolverError> {
    let n = grid.n_phi();
    let rho = grid.laplacian(phi).shift(1.0);
    let b: Vec<f64> = rho
        .values
        .iter()
        .enumerate()
        .map(|(i, r)| 2.0 * grid.row_weight(i / n) * r)
        .collect();
    let btot: f64 = b.iter().sum();
    let bdot = |x: &[f64], y: &[f64]| -> f64 {
        x.iter()
            .zip(y)
            .zip(&b)
            .map(|((xi, yi), bi)| xi * yi * bi)
            .sum()
    };
    let project = |x: &mut Vec<f64>| {
        let m: f64 = x.iter().zip(&b).map(|(xi, bi)| xi * bi).sum::<f64>() / btot;
        x.iter_mut().for_each(|v| *v -= m);
    };
    // B-orthonormal Gram-Schmidt, twice for stability
    let orthonormalize = |xs: &mut Vec<Vec<f64>>| -> Result<(), SolverError> {
        for k in 0..xs.len() {
            for _ in 0..2 {
                for j in 0..k {
                    let c = bdot(&xs[k], &xs[j]);
                    let (head, tail) = xs.split_at_mut(k);
                    tail[0]
                        .iter_mut()
                        .zip(&head[j])
                        .for_each(|(v, w)| *v -= c * w);
                }
            }
            let nk = bdot(&xs[k], &xs[k]).sqrt();
            if !(nk > 0.0 && nk.is_finite()) {
                return Err(SolverError::Eigen);
            }
            xs[k].iter_mut().for_each(|v| *v /= nk);
        }
        Ok(())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut xs: Vec<Vec<f64>> = (0..BLOCK)
        .map(|k| {
            let mut x: Vec<f64> = (0..grid.len())
                .map(|i| grid.x(i)[k % 3] + 0.5 * rng.gen_range(-1.0..1.0))
                .collect();
            project(&mut x);
            x
        })
        .collect();
    orthonormalize(&mut xs)?;

    let zeros = vec![0.0; grid.n_u()];
    let mut lambda = f64::INFINITY;
    for _ in 0..500 {
        let mut ys = Vec::with_capacity(BLOCK);
        for x in &xs {
            let rhs: Vec<f64> = x.iter().zip(&b).map(|(xi, bi)| -xi * bi).collect();
            let mut y = grid
                .solve_rows(&zeros, &rhs, true)
                .map_err(|_| SolverError::Eigen)?;
            project(&mut y);
            ys.push(y);
        }
        orthonormalize(&mut ys)?;
        let gys: Vec<Vec<f64>> = ys.iter().map(|y| grid.graph_laplacian(y)).collect();
        let k = DMatrix::from_fn(BLOCK, BLOCK, |i, j| {
            let a: f64 = -ys[i].iter().zip(&gys[j]).map(|(u, v)| u * v).sum::<f64>();
            let c: f64 = -ys[j].iter().zip(&gys[i]).map(|(u, v)| u * v).sum::<f64>();
            0.5 * (a + c)
        });
        let eig = SymmetricEigen::new(k);
        let order = {
            let mut o: Vec<usize> = (0..BLOCK).collect();
            o.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
            o
        };
        let next = eig.eigenvalues[order[0]];
        xs = order
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; grid.len()];
                for (r, y) in ys.iter().enumerate() {
                    let w = eig.eigenvectors[(r, c)];
                    v.iter_mut().zip(y).for_each(|(a, yi)| *a += w * yi);
                }
                v
            })
            .collect();
        if (next - lambda).abs() <= 1e-11 * next.abs() {
            return Ok(next);
        }
        lambda = next;
    }
    Err(SolverError::Eigen)
}
