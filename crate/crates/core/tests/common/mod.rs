#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use redg_core::Matrix;

/// One-sided Jacobi SVD, written independently of the library's routines.
/// Returns `(u, sigma, v)` with `sigma` descending and `a = u diag(sigma) v^T`.
pub fn jacobi_svd(a: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let transposed = a.nrows() < a.ncols();
    let mut w = if transposed { a.transpose() } else { a.clone() };
    let (rows, cols) = w.shape();
    let mut v = Matrix::identity(cols, cols);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..rows {
                    alpha += w[(i, p)] * w[(i, p)];
                    beta += w[(i, q)] * w[(i, q)];
                    gamma += w[(i, p)] * w[(i, q)];
                }
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(f64::MIN_POSITIVE));
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..cols {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sig: Vec<(f64, usize)> = (0..cols).map(|j| (w.column(j).norm(), j)).collect();
    sig.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut u = Matrix::zeros(rows, cols);
    let mut vs = Matrix::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(cols);
    for (k, &(s, j)) in sig.iter().enumerate() {
        sigma.push(s);
        if s > 0.0 {
            u.set_column(k, &(w.column(j) / s));
        }
        vs.set_column(k, &v.column(j));
    }
    if transposed {
        (vs, sigma, u)
    } else {
        (u, sigma, vs)
    }
}

/// Pseudo-inverse from the Jacobi oracle, same cutoff rule as the library.
pub fn oracle_pinv(a: &Matrix, rel_tol: f64) -> Matrix {
    let (u, s, v) = jacobi_svd(a);
    let cutoff = rel_tol * s[0] * a.nrows().max(a.ncols()) as f64;
    let mut out = Matrix::zeros(a.ncols(), a.nrows());
    for (k, &sk) in s.iter().enumerate() {
        if sk > cutoff {
            out += v.column(k) * u.column(k).transpose() / sk;
        }
    }
    out
}

/// Squared distances by explicit pairwise differences.
pub fn pairwise_sqdist(points: &[Vec<f64>]) -> Matrix {
    let t = points.len();
    Matrix::from_fn(t, t, |i, j| points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum())
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Planted robust PCA instance: `L = G1 G2 / sqrt(r)` with Gaussian factors and
/// `floor(p m n)` outliers of random sign and magnitude `U[0.5, 1.5] ||L||_inf`.
pub fn planted(m: usize, n: usize, r: usize, p: f64, seed: u64) -> (Matrix, Matrix) {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian(m, r, &mut g);
    let b = gaussian(r, n, &mut g);
    let l = a * b / (r as f64).sqrt();
    let li = l.amax();
    let k = (p * (m * n) as f64).floor() as usize;
    let idx = rand::seq::index::sample(&mut g, m * n, k).into_vec();
    let mut s = Matrix::zeros(m, n);
    for f in idx {
        let sign = if g.random::<bool>() { 1.0 } else { -1.0 };
        s[(f / n, f % n)] = sign * g.random_range(0.5..1.5) * li;
    }
    (l, s)
}

/// Random rotation (possibly improper) from the QR of a Gaussian matrix.
pub fn random_orthogonal(dim: usize, rng: &mut ChaCha8Rng) -> Matrix {
    gaussian(dim, dim, rng).qr().q()
}
