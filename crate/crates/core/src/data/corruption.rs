use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{EdgError, Result};
use crate::numerics::Matrix;

/// Record of the outliers planted by [`corrupt_block`].
#[derive(Debug, Clone, Serialize)]
pub struct CorruptionSpec {
    pub alpha: f64,
    /// `floor(alpha * rows * cols)`.
    pub count: usize,
    /// Distinct `(row, col)` positions, sorted row-major.
    pub support: Vec<(usize, usize)>,
    /// Noise added at each `support` position.
    pub noise: Vec<f64>,
    /// Noise is uniform on `[-b, b]` with `b` the mean of `|F_ij|` over the clean block.
    pub magnitude_bound: f64,
}

impl CorruptionSpec {
    /// The planted sparse matrix.
    pub fn sparse_matrix(&self, rows: usize, cols: usize) -> Matrix {
        let mut s = Matrix::zeros(rows, cols);
        for (&(i, j), &v) in self.support.iter().zip(&self.noise) {
            s[(i, j)] = v;
        }
        s
    }
}

/// Add uniform outliers to a fraction `alpha` of the entries of `f`, chosen
/// uniformly without replacement. Reproducible for a given `seed`.
pub fn corrupt_block(f: &Matrix, alpha: f64, seed: u64) -> Result<(Matrix, CorruptionSpec)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(EdgError::arg(format!("alpha {alpha} outside [0, 1]")));
    }
    let (rows, cols) = f.shape();
    let total = rows * cols;
    let count = ((alpha * total as f64).floor() as usize).min(total);
    let bound = if total == 0 { 0.0 } else { f.iter().map(|x| x.abs()).sum::<f64>() / total as f64 };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks: Vec<usize> = sample(&mut rng, total, count).into_vec();
    picks.sort_unstable();

    let mut out = f.clone();
    let mut support = Vec::with_capacity(count);
    let mut noise = Vec::with_capacity(count);
    for flat in picks {
        let (i, j) = (flat / cols, flat % cols);
        let v = if bound > 0.0 { rng.random_range(-bound..=bound) } else { 0.0 };
        out[(i, j)] += v;
        support.push((i, j));
        noise.push(v);
    }

    Ok((out, CorruptionSpec { alpha, count, support, noise, magnitude_bound: bound }))
}
